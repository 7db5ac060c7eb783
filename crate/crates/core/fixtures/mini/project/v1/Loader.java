package org.demo.app;

import org.acme.io.Channel;

public class Loader {
    private final String root;

    public Loader(String root) {
        this.root = root;
    }

    public String describe() {
        return "loader@" + root;
    }
}
