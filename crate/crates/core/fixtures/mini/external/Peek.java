package dev.peek.util;

import org.acme.io.Channel;

public final class Peek {
    private Peek() {
    }

    public static int peek(String location) {
        Channel channel = new Channel(location);
        int head = channel.read();
        channel.close();
        return head;
    }
}
