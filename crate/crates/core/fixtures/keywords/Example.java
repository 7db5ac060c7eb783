package my.own.pkg;

import a.b.AClass;
import a.b.BClass;
import c.d.CClass;
import z.y.ZClass;
import x.v.*;
import my.own.pkg.QClass;

public class Example extends Base {

    @Override
    public ZClass doSomething(AClass a) {
        BClass b = new BClass(a);
        QClass q = new QClass();
        RClass r = b.convert(q);
        return r.toZ();
    }
}
