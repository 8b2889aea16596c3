package com.acme.domain;

import java.util.ArrayList;
import java.util.List;

public class Order {
    private final List<Integer> prices = new ArrayList<>();

    public void add(int price) {
        prices.add(price);
    }

    public int size() {
        return prices.size();
    }

    public int total() {
        return prices.stream().mapToInt(Integer::intValue).sum();
    }
}
