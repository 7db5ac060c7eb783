package com.other.stuff;

import com.other.net.Socket;

public class Unrelated {
    public void ping(Socket s) {
        s.send("ping");
        s.close();
    }
}
