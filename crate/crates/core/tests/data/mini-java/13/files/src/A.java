package com.acme;

import com.acme.domain.Order;
import com.acme.util.Helper;

/**
 * Entry point.
 */
public class A {
    private int count;
    private Order current;

    public int next() {
        count += 1;
        return count;
    }

    public void reset() {
        count = 0;
        current = new Order();
    }

    public String label() {
        return Helper.pad(format(), 4);
    }

    private String format() {
        // count is never negative here
        return String.valueOf(count);
    }
}
