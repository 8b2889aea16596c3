package com.acme.domain;

import java.util.ArrayList;
import java.util.List;

/* Line items are kept in insertion order. */

public class Order {
    private final List<Integer> prices = new ArrayList<>();

    public void add(int price) {
        if (price < 0) {
            throw new IllegalArgumentException("negative price");
        }
        prices.add(price);
    }

    public int size() {
        return prices.size();
    }

    public int total() {
        return prices.stream().mapToInt(Integer::intValue).sum();
    }
}
