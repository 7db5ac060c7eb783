package io.github.reader;

import org.acme.io.*;

public class Reader {
    public int first(String name) {
        Channel in = new Channel(name);
        int b = in.read();
        in.close();
        return b;
    }
}
