package org.sampling.core;

import java.util.ArrayList;
import java.util.List;
import org.acme.io.Channel;

public class Sampler {
    public List<Integer> sample(String source, int times) {
        List<Integer> out = new ArrayList<>();
        for (int i = 0; i < times; i++) {
            Channel ch = new Channel(source);
            int v = ch.read();
            ch.close();
            out.add(v);
        }
        return out;
    }
}
