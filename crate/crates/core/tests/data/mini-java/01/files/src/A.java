package com.acme;

/**
 * Entry point.
 */
public class A {
    private int count;

    public int next() {
        return ++count;
    }
}
