package org.broken;

public class Broken {
    public int half(int v) {
        return v / / 2;
    }
}
