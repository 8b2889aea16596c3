package com.acme;

import com.acme.domain.Order;
import com.acme.util.Helper;

/**
 * Entry point; keeps a running counter and the order being edited.
 */
public class A {
    private static final int WIDTH = 4;
    private int count;
    private Order current = new Order();

    public int next() {
        count += 1;
        return count;
    }

    public void reset() {
        count = 0;
        current = new Order();
    }

    public Order current() {
        return current;
    }

    public String label() {
        /* padded to four columns */
        return Helper.pad(format(), WIDTH);
    }

    private String format() {
        return Integer.toString(count);
    }
}
