package net.probe.tools;

import org.acme.io.Channel;

public class Probe {
    private int last;

    public int probe(String target) {
        Channel channel = new Channel(target);
        int value = channel.read();
        channel.close();
        last = value;
        return value;
    }

    public int last() {
        return last;
    }
}
