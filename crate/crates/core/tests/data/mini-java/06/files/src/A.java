package com.acme;

import com.acme.util.Helper;

/**
 * Entry point.
 */
public class A {
    private int count;

    public int next() {
        return ++count;
    }

    public void reset() {
        count = 0;
    }

    public String label() {
        return Helper.pad(format(), 4);
    }

    private String format() {
        return String.valueOf(count);
    }
}
