use std::collections::HashMap;

use super::{Aug, EdgeKind, MethodRef, NodeKind, INIT, RETURN, UNKNOWN};
use crate::java::{CompilationUnit, Expr, LambdaBody, MethodDecl, Stmt, TypeRef};

/// Builds the usage graph of one method.
///
/// Calls and constructor calls become action nodes, return statements become
/// `<return>` actions, and object instances become data nodes labeled with
/// their static type (or `UNKNOWN`). Instances are only materialized once an
/// action uses them, so call results that are dropped or only compared leave
/// no data node behind.
pub fn build_aug(method: &MethodDecl, unit: &CompilationUnit, method_ref: MethodRef) -> Aug {
    let owner = unit.owner_of(method);
    let mut b = Builder {
        g: Aug::new(method_ref),
        last_action: None,
        scopes: vec![HashMap::new()],
        fields: owner
            .map(|t| t.fields.iter().map(|f| (f.name.clone(), f.ty.label())).collect())
            .unwrap_or_default(),
        sibling_returns: owner
            .map(|t| {
                let mut m = HashMap::new();
                for s in &t.methods {
                    m.entry(s.name.clone()).or_insert_with(|| s.return_type.clone());
                }
                m
            })
            .unwrap_or_default(),
        shared: HashMap::new(),
    };
    for p in &method.params {
        b.declare(&p.name, p.ty.label(), None);
    }
    if let Some(body) = &method.body {
        b.stmts(body);
    }
    b.g
}

/// Evaluation result of an expression.
#[derive(Debug, Clone)]
enum Value {
    None,
    Node(usize),
    /// Result of an action, not yet materialized.
    Pending { action: usize, label: String },
    /// A variable whose data node is created on first use.
    Var(String),
    /// A fresh instance without a producing action (array element, field of a temporary).
    Fresh(String),
    /// A type name used as the target of a static member access.
    Type,
}

#[derive(Debug, Clone)]
struct Slot {
    label: String,
    node: Option<usize>,
}

struct Builder {
    g: Aug,
    last_action: Option<usize>,
    scopes: Vec<HashMap<String, Slot>>,
    fields: HashMap<String, String>,
    sibling_returns: HashMap<String, TypeRef>,
    /// Data nodes for fields and unresolved names/paths, one per name.
    shared: HashMap<String, usize>,
}

impl Builder {
    fn action(&mut self, label: &str) -> usize {
        let id = self.g.add_node(NodeKind::Action, label);
        if let Some(prev) = self.last_action {
            self.g.add_edge(prev, id, EdgeKind::Order);
        }
        self.last_action = Some(id);
        id
    }

    fn declare(&mut self, name: &str, label: String, node: Option<usize>) {
        self.scopes
            .last_mut()
            .expect("scope stack is never empty")
            .insert(name.to_string(), Slot { label, node });
    }

    fn lookup(&mut self, name: &str) -> Option<&mut Slot> {
        self.scopes.iter_mut().rev().find_map(|s| s.get_mut(name))
    }

    fn is_var(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| s.contains_key(name))
    }

    fn shared_node(&mut self, key: &str, label: &str) -> usize {
        if let Some(&n) = self.shared.get(key) {
            return n;
        }
        let n = self.g.add_node(NodeKind::Data, label);
        self.shared.insert(key.to_string(), n);
        n
    }

    /// Data node for a value that an action uses.
    fn materialize(&mut self, v: Value) -> Option<usize> {
        match v {
            Value::None | Value::Type => None,
            Value::Node(n) => Some(n),
            Value::Pending { action, label } => {
                let n = self.g.add_node(NodeKind::Data, label);
                self.g.add_edge(action, n, EdgeKind::Def);
                Some(n)
            }
            Value::Fresh(label) => Some(self.g.add_node(NodeKind::Data, label)),
            Value::Var(name) => {
                if let Some(slot) = self.lookup(&name) {
                    if let Some(n) = slot.node {
                        return Some(n);
                    }
                    let label = slot.label.clone();
                    let n = self.g.add_node(NodeKind::Data, label);
                    if let Some(slot) = self.lookup(&name) {
                        slot.node = Some(n);
                    }
                    return Some(n);
                }
                let label = self.fields.get(&name).cloned().unwrap_or_else(|| UNKNOWN.to_string());
                Some(self.shared_node(&name, &label))
            }
        }
    }

    fn scoped(&mut self, f: impl FnOnce(&mut Self)) {
        self.scopes.push(HashMap::new());
        f(self);
        self.scopes.pop();
    }

    fn stmts(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn block(&mut self, stmts: &[Stmt]) {
        self.scoped(|b| b.stmts(stmts));
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Block(body) => self.block(body),
            Stmt::LocalVar { ty, vars, .. } => {
                for (name, init) in vars {
                    self.local(ty, name, init.as_ref());
                }
            }
            Stmt::LocalType(ty) => {
                for m in &ty.methods {
                    if let Some(body) = &m.body {
                        self.block(body);
                    }
                }
            }
            Stmt::Expr(e) | Stmt::Throw(e) => {
                self.expr(e);
            }
            Stmt::If { cond, then, otherwise } => {
                self.expr(cond);
                self.scoped(|b| b.stmt(then));
                if let Some(o) = otherwise {
                    self.scoped(|b| b.stmt(o));
                }
            }
            Stmt::While { cond, body } => {
                self.expr(cond);
                self.scoped(|b| b.stmt(body));
            }
            Stmt::DoWhile { body, cond } => {
                self.scoped(|b| b.stmt(body));
                self.expr(cond);
            }
            Stmt::For { init, cond, update, body } => self.scoped(|b| {
                b.stmts(init);
                if let Some(c) = cond {
                    b.expr(c);
                }
                b.scoped(|b| b.stmt(body));
                for u in update {
                    b.expr(u);
                }
            }),
            Stmt::ForEach { ty, name, iterable, body } => {
                self.expr(iterable);
                self.scoped(|b| {
                    b.declare(name, ty.label(), None);
                    b.stmt(body);
                });
            }
            Stmt::Try { resources, body, catches, finally } => {
                self.scoped(|b| {
                    b.stmts(resources);
                    b.block(body);
                });
                for c in catches {
                    self.scoped(|b| {
                        let label = c.types.first().map_or_else(|| UNKNOWN.to_string(), TypeRef::label);
                        b.declare(&c.name, label, None);
                        b.stmts(&c.body);
                    });
                }
                if let Some(f) = finally {
                    self.block(f);
                }
            }
            Stmt::Switch { selector, cases } => {
                self.expr(selector);
                self.scoped(|b| {
                    for group in cases {
                        b.stmts(group);
                    }
                });
            }
            Stmt::Synchronized { lock, body } => {
                self.expr(lock);
                self.block(body);
            }
            Stmt::Return(value, _) => {
                let v = value.as_ref().map_or(Value::None, |e| self.expr(e));
                let arg = self.materialize(v);
                let ret = self.action(RETURN);
                if let Some(a) = arg {
                    self.g.add_edge(a, ret, EdgeKind::Para);
                }
            }
            Stmt::Labeled(_, inner) => self.stmt(inner),
            Stmt::Opaque { calls, .. } => {
                for c in calls {
                    self.expr(c);
                }
            }
            Stmt::Break | Stmt::Continue | Stmt::Empty => {}
        }
    }

    fn local(&mut self, ty: &TypeRef, name: &str, init: Option<&Expr>) {
        let inferred = ty.name == "var";
        let Some(init) = init else {
            self.declare(name, if inferred { UNKNOWN.into() } else { ty.label() }, None);
            return;
        };
        let v = self.expr(init);
        let (label, node) = match v {
            Value::Pending { action, label } => {
                let label = if inferred { label } else { ty.label() };
                let n = self.g.add_node(NodeKind::Data, label.clone());
                self.g.add_edge(action, n, EdgeKind::Def);
                (label, Some(n))
            }
            Value::Node(_) | Value::Var(_) => {
                let n = self.materialize(v);
                let label = match (inferred, n) {
                    (true, Some(n)) => self.g.nodes[n].label.clone(),
                    _ => ty.label(),
                };
                (label, n)
            }
            Value::Fresh(l) => (if inferred { l } else { ty.label() }, None),
            Value::None | Value::Type => (if inferred { UNKNOWN.into() } else { ty.label() }, None),
        };
        self.declare(name, label, node);
    }

    fn args(&mut self, args: &[Expr]) -> Vec<Value> {
        args.iter().map(|a| self.expr(a)).collect()
    }

    fn expr(&mut self, e: &Expr) -> Value {
        match e {
            Expr::Name(n) => {
                if self.is_var(n) || self.fields.contains_key(n) {
                    Value::Var(n.clone())
                } else if n.starts_with(|c: char| c.is_uppercase()) {
                    Value::Type
                } else {
                    Value::Var(n.clone())
                }
            }
            Expr::Literal(..) | Expr::This | Expr::Super | Expr::ClassLit(_) => Value::None,
            Expr::FieldAccess { target, name } => match target.as_ref() {
                Expr::This => Value::Var(name.clone()),
                _ => {
                    let t = self.expr(target);
                    let path = crate::java::render_expr(e);
                    match t {
                        // `a.b.c` over plain names is one stable instance
                        Value::Var(_) | Value::Type if !path.contains('(') => {
                            let n = self.shared_node(&path, UNKNOWN);
                            Value::Node(n)
                        }
                        _ => Value::Fresh(UNKNOWN.into()),
                    }
                }
            },
            Expr::Call { target, name, args, .. } => {
                if target.is_none() && (name == "this" || name == "super") {
                    for a in args {
                        self.expr(a);
                    }
                    return Value::None;
                }
                let recv = target.as_deref().map_or(Value::None, |t| self.expr(t));
                let vals = self.args(args);
                let recv_node = self.materialize(recv);
                let arg_nodes: Vec<usize> = vals.into_iter().filter_map(|v| self.materialize(v)).collect();
                let a = self.action(name);
                if let Some(r) = recv_node {
                    self.g.add_edge(r, a, EdgeKind::Recv);
                }
                for n in arg_nodes {
                    self.g.add_edge(n, a, EdgeKind::Para);
                }
                let local = target.as_deref().is_none_or(|t| matches!(t, Expr::This));
                let label = if local {
                    match self.sibling_returns.get(name) {
                        Some(t) if t.is_void() => return Value::None,
                        Some(t) => t.label(),
                        None => UNKNOWN.to_string(),
                    }
                } else {
                    UNKNOWN.to_string()
                };
                Value::Pending { action: a, label }
            }
            Expr::New { ty, args, body, .. } => {
                let vals = self.args(args);
                let arg_nodes: Vec<usize> = vals.into_iter().filter_map(|v| self.materialize(v)).collect();
                let a = self.action(INIT);
                for n in arg_nodes {
                    self.g.add_edge(n, a, EdgeKind::Para);
                }
                if let Some(methods) = body {
                    for m in methods {
                        if let Some(b) = &m.body {
                            self.block(b);
                        }
                    }
                }
                Value::Pending { action: a, label: ty.label() }
            }
            Expr::NewArray { dims, init, .. } => {
                for d in dims {
                    self.expr(d);
                }
                for i in init.iter().flatten() {
                    self.expr(i);
                }
                Value::None
            }
            Expr::ArrayInit(items) => {
                for i in items {
                    self.expr(i);
                }
                Value::None
            }
            Expr::Assign { target, op, value } => {
                let v = self.expr(value);
                match target.as_ref() {
                    Expr::Name(n) if op == "=" && self.is_var(n) => {
                        let node = match v {
                            Value::Pending { action, .. } => {
                                let label = self.lookup(n).map(|s| s.label.clone()).unwrap_or_else(|| UNKNOWN.into());
                                let d = self.g.add_node(NodeKind::Data, label);
                                self.g.add_edge(action, d, EdgeKind::Def);
                                Some(d)
                            }
                            other => self.materialize(other),
                        };
                        if let Some(slot) = self.lookup(n) {
                            slot.node = node;
                        }
                        node.map_or(Value::None, Value::Node)
                    }
                    t => {
                        self.expr(t);
                        self.materialize(v).map_or(Value::None, Value::Node)
                    }
                }
            }
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
                Value::None
            }
            Expr::Unary { operand, .. } => {
                self.expr(operand);
                Value::None
            }
            Expr::Conditional { cond, then, otherwise } => {
                self.expr(cond);
                self.expr(then);
                self.expr(otherwise);
                Value::None
            }
            Expr::Cast { ty, expr } => match self.expr(expr) {
                Value::Pending { action, .. } => Value::Pending { action, label: ty.label() },
                Value::Fresh(_) => Value::Fresh(ty.label()),
                other => other,
            },
            Expr::InstanceOf { expr, .. } => {
                self.expr(expr);
                Value::None
            }
            Expr::Index { target, index } => {
                self.expr(target);
                self.expr(index);
                Value::Fresh(UNKNOWN.into())
            }
            Expr::Lambda { params, body } => {
                self.scoped(|b| {
                    for p in params {
                        b.declare(p, UNKNOWN.into(), None);
                    }
                    match body {
                        LambdaBody::Expr(x) => {
                            b.expr(x);
                        }
                        LambdaBody::Block(stmts) => b.stmts(stmts),
                    }
                });
                Value::None
            }
            Expr::MethodRef { target, .. } => {
                self.expr(target);
                Value::None
            }
            Expr::Opaque { calls } => {
                for c in calls {
                    self.expr(c);
                }
                Value::None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aug::{graph_fingerprint, testing::graph};
    use crate::java::parse_compilation_unit;

    fn aug_of(src: &str) -> Aug {
        let unit = parse_compilation_unit(src).unwrap();
        let m = unit.methods()[0];
        build_aug(m, &unit, MethodRef::new("T.java", &m.name, 0))
    }

    fn labels(g: &Aug) -> Vec<(NodeKind, &str)> {
        g.nodes.iter().map(|n| (n.kind, n.label.as_str())).collect()
    }

    #[test]
    fn empty_body_gives_empty_graph() {
        assert!(aug_of("class C { void m() {} }").is_empty());
    }

    #[test]
    fn constructor_then_call() {
        let g = aug_of("class C { void f() { A a = new A(); a.m(); } }");
        let expected = graph(
            &[(NodeKind::Action, INIT), (NodeKind::Data, "A"), (NodeKind::Action, "m")],
            &[(0, 1, EdgeKind::Def), (0, 2, EdgeKind::Order), (1, 2, EdgeKind::Recv)],
        );
        assert_eq!(labels(&g), labels(&expected));
        let mut edges = g.edges.clone();
        edges.sort();
        let mut want = expected.edges.clone();
        want.sort();
        assert_eq!(edges, want);
    }

    #[test]
    fn fancy_method_graph() {
        let src = "package sample; public class SampleClass { public Object myFancyMethod() { SampleClass sample = new SampleClass(); return sample.doSomething(); } }";
        let g = aug_of(src);
        assert_eq!(
            labels(&g),
            [
                (NodeKind::Action, INIT),
                (NodeKind::Data, "SampleClass"),
                (NodeKind::Action, "doSomething"),
                (NodeKind::Data, UNKNOWN),
                (NodeKind::Action, RETURN),
            ]
        );
        let sigs: Vec<(usize, usize, EdgeKind)> = g.edges.iter().map(|e| (e.src, e.dst, e.kind)).collect();
        for want in [
            (0, 1, EdgeKind::Def),
            (1, 2, EdgeKind::Recv),
            (0, 2, EdgeKind::Order),
            (2, 3, EdgeKind::Def),
            (3, 4, EdgeKind::Para),
            (2, 4, EdgeKind::Order),
        ] {
            assert!(sigs.contains(&want), "missing {want:?} in {sigs:?}");
        }
        assert_eq!(sigs.len(), 6);
    }

    #[test]
    fn parameters_and_arguments() {
        let g = aug_of("class C { void f(Reader r, Writer w) { w.write(r.read()); r.close(); } }");
        // read's result feeds write as an argument
        let l = labels(&g);
        assert_eq!(l.iter().filter(|(k, _)| *k == NodeKind::Data).count(), 3);
        let read = l.iter().position(|x| *x == (NodeKind::Action, "read")).unwrap();
        let write = l.iter().position(|x| *x == (NodeKind::Action, "write")).unwrap();
        let close = l.iter().position(|x| *x == (NodeKind::Action, "close")).unwrap();
        assert!(g.edges.iter().any(|e| e.src == read && e.dst == write && e.kind == EdgeKind::Order));
        assert!(g.edges.iter().any(|e| e.src == write && e.dst == close && e.kind == EdgeKind::Order));
        let reader = l.iter().position(|x| *x == (NodeKind::Data, "Reader")).unwrap();
        assert_eq!(g.edges.iter().filter(|e| e.src == reader && e.kind == EdgeKind::Recv).count(), 2);
    }

    #[test]
    fn dropped_results_leave_no_data() {
        let g = aug_of("class C { void f(It it) { while (it.hasNext()) { it.next(); } } }");
        assert_eq!(labels(&g).iter().filter(|(k, _)| *k == NodeKind::Data).count(), 1);
    }

    #[test]
    fn static_calls_have_no_receiver() {
        let g = aug_of("class C { void f() { Util.run(); } }");
        assert_eq!(labels(&g), [(NodeKind::Action, "run")]);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn casts_and_var_take_resolved_types() {
        let g = aug_of("class C { void f(Map m) { var s = (String) m.get(k); s.trim(); } }");
        assert!(labels(&g).contains(&(NodeKind::Data, "String")));
        assert!(labels(&g).contains(&(NodeKind::Data, UNKNOWN)));
    }

    #[test]
    fn sibling_return_types_resolve() {
        let g = aug_of("class C { void f() { make().go(); } Thing make() { return null; } }");
        assert!(labels(&g).contains(&(NodeKind::Data, "Thing")));
    }

    #[test]
    fn invariants_hold() {
        let src = "class C { int f(A a, B b) { try { X x = a.open(b); x.use(a, b.get()); } catch (E e) { e.log(); } finally { a.close(); } if (a.ok()) return a.size(); return 0; } }";
        let g = aug_of(src);
        g.validate().unwrap();
        for (i, n) in g.nodes.iter().enumerate() {
            let defs = g.edges.iter().filter(|e| e.dst == i && e.kind == EdgeKind::Def).count();
            let recvs = g.edges.iter().filter(|e| e.dst == i && e.kind == EdgeKind::Recv).count();
            match n.kind {
                NodeKind::Data => assert!(defs <= 1),
                NodeKind::Action => assert!(recvs <= 1),
            }
        }
        assert!(g.edges.iter().filter(|e| e.kind == EdgeKind::Order).all(|e| e.src < e.dst));
        assert_eq!(graph_fingerprint(&g), graph_fingerprint(&aug_of(src)));
    }
}
