package org.demo.app;

import java.util.List;
import java.util.ArrayList;

public class Util {
    public static List<String> split(String line) {
        List<String> out = new ArrayList<>();
        for (String part : line.split(",")) {
            out.add(part.trim());
        }
        return out;
    }
}
