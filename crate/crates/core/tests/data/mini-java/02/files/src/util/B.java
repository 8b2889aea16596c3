package com.acme.util;

public final class B {
    private B() {
    }

    public static String pad(String s, int width) {
        StringBuilder sb = new StringBuilder(s);
        while (sb.length() < width) {
            sb.insert(0, ' ');
        }
        return sb.toString();
    }
}
