package com.acme.util;

public final class Helper {
    private Helper() {
    }

    // left-pads with zeros
    public static String pad(String s, int width) {
        StringBuilder sb = new StringBuilder(s);
        while (sb.length() < width) {
            sb.insert(0, '0');
        }
        return sb.toString();
    }

    public static String trim(String s) {
        return s == null ? "" : s.trim();
    }
}
