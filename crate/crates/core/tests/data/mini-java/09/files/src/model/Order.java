package com.acme.model;

import java.util.ArrayList;
import java.util.List;

public class Order {
    private final List<Integer> prices = new ArrayList<>();

    public void add(int price) {
        prices.add(price);
    }

    public int total() {
        return prices.stream().mapToInt(Integer::intValue).sum();
    }
}
