package com.acme.model;

import static org.junit.Assert.assertEquals;

import org.junit.Test;

public class OrderTest {
    @Test
    public void sums() {
        Order o = new Order();
        o.add(3);
        o.add(4);
        assertEquals(7, o.total());
    }
}
