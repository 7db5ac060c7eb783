use std::fmt::Write;

use super::ast::*;

/// Renders a compilation unit back to Java source. Constructs the parser only
/// keeps partially (enum constants, switch labels, opaque statements) are
/// printed in a normalized form, so `print(parse(print(u)))` equals `print(u)`.
pub fn print_unit(unit: &CompilationUnit) -> String {
    let mut p = Printer::default();
    if !unit.package_name.is_empty() {
        p.line(&format!("package {};", unit.package_name));
    }
    for i in &unit.imports {
        let stat = if i.is_static { "static " } else { "" };
        let star = if i.is_wildcard { ".*" } else { "" };
        p.line(&format!("import {stat}{}{star};", i.qualified_name));
    }
    for t in &unit.types {
        p.type_decl(t);
    }
    p.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e);
    p.out
}

fn type_ref(t: &TypeRef) -> String {
    let mut s = t.name.clone();
    if !t.args.is_empty() {
        let args: Vec<String> = t.args.iter().map(type_ref).collect();
        let _ = write!(s, "<{}>", args.join(", "));
    }
    for _ in 0..t.array_dims {
        s.push_str("[]");
    }
    s
}

fn type_list(ts: &[TypeRef]) -> String {
    ts.iter().map(type_ref).collect::<Vec<_>>().join(", ")
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn open(&mut self, s: &str) {
        self.line(s);
        self.indent += 1;
    }

    fn close(&mut self, s: &str) {
        self.indent -= 1;
        self.line(s);
    }

    fn type_decl(&mut self, t: &TypeDecl) {
        let mut head = match t.kind {
            TypeKind::Class => format!("class {}", t.name),
            TypeKind::Interface => format!("interface {}", t.name),
            TypeKind::Enum => format!("enum {}", t.name),
            TypeKind::Annotation => format!("@interface {}", t.name),
            TypeKind::Record => {
                let comps: Vec<String> = t.fields.iter().map(|f| format!("{} {}", type_ref(&f.ty), f.name)).collect();
                format!("record {}({})", t.name, comps.join(", "))
            }
        };
        if !t.extends.is_empty() {
            let _ = write!(head, " extends {}", type_list(&t.extends));
        }
        if !t.implements.is_empty() {
            let _ = write!(head, " implements {}", type_list(&t.implements));
        }
        head.push_str(" {");
        self.open(&head);
        if t.kind == TypeKind::Enum {
            self.line(";");
        }
        if t.kind != TypeKind::Record {
            for f in &t.fields {
                self.line(&format!("{} {};", type_ref(&f.ty), f.name));
            }
        }
        for m in &t.methods {
            self.method(m);
        }
        for n in &t.nested {
            self.type_decl(n);
        }
        self.close("}");
    }

    fn method(&mut self, m: &MethodDecl) {
        for a in &m.annotations {
            self.line(&format!("@{a}"));
        }
        let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", type_ref(&p.ty), p.name)).collect();
        let mut head = if m.is_constructor {
            format!("{}({})", m.name, params.join(", "))
        } else {
            format!("{} {}({})", type_ref(&m.return_type), m.name, params.join(", "))
        };
        if !m.thrown_types.is_empty() {
            let _ = write!(head, " throws {}", type_list(&m.thrown_types));
        }
        match &m.body {
            None => self.line(&format!("{head};")),
            Some(body) => {
                self.open(&format!("{head} {{"));
                self.stmts(body);
                self.close("}");
            }
        }
    }

    fn stmts(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn block(&mut self, head: &str, body: &[Stmt], tail: &str) {
        self.open(&format!("{head}{{"));
        self.stmts(body);
        self.close(&format!("}}{tail}"));
    }

    /// A nested statement, always braced so dangling `else` cannot rebind.
    fn body(&mut self, head: &str, s: &Stmt, tail: &str) {
        match s {
            Stmt::Block(b) => self.block(head, b, tail),
            other => self.block(head, std::slice::from_ref(other), tail),
        }
    }

    fn local_var(&self, ty: &TypeRef, vars: &[(String, Option<Expr>)]) -> String {
        let parts: Vec<String> = vars
            .iter()
            .map(|(n, init)| match init {
                Some(e) => format!("{n} = {}", print_expr(e)),
                None => n.clone(),
            })
            .collect();
        format!("{} {}", type_ref(ty), parts.join(", "))
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Block(b) => self.block("", b, ""),
            Stmt::LocalVar { ty, vars, .. } => {
                let s = self.local_var(ty, vars);
                self.line(&format!("{s};"));
            }
            Stmt::LocalType(t) => self.type_decl(t),
            Stmt::Expr(e) => self.line(&format!("{};", print_expr(e))),
            Stmt::If { cond, then, otherwise } => {
                let head = format!("if ({}) ", print_expr(cond));
                match otherwise {
                    None => self.body(&head, then, ""),
                    Some(o) => {
                        self.body(&head, then, "");
                        self.body("else ", o, "");
                    }
                }
            }
            Stmt::While { cond, body } => self.body(&format!("while ({}) ", print_expr(cond)), body, ""),
            Stmt::DoWhile { body, cond } => self.body("do ", body, &format!(" while ({});", print_expr(cond))),
            Stmt::For { init, cond, update, body } => {
                let init: Vec<String> = init
                    .iter()
                    .map(|s| match s {
                        Stmt::LocalVar { ty, vars, .. } => self.local_var(ty, vars),
                        Stmt::Expr(e) => print_expr(e),
                        _ => String::new(),
                    })
                    .collect();
                let cond = cond.as_ref().map(print_expr).unwrap_or_default();
                let update: Vec<String> = update.iter().map(print_expr).collect();
                let head = format!("for ({}; {}; {}) ", init.join(", "), cond, update.join(", "));
                self.body(&head, body, "");
            }
            Stmt::ForEach { ty, name, iterable, body } => {
                let head = format!("for ({} {} : {}) ", type_ref(ty), name, print_expr(iterable));
                self.body(&head, body, "");
            }
            Stmt::Try { resources, body, catches, finally } => {
                let mut head = "try ".to_string();
                if !resources.is_empty() {
                    let rs: Vec<String> = resources
                        .iter()
                        .map(|s| match s {
                            Stmt::LocalVar { ty, vars, .. } => self.local_var(ty, vars),
                            Stmt::Expr(e) => print_expr(e),
                            _ => String::new(),
                        })
                        .collect();
                    head = format!("try ({}) ", rs.join("; "));
                }
                self.open(&format!("{head}{{"));
                self.stmts(body);
                self.indent -= 1;
                for c in catches {
                    let types: Vec<String> = c.types.iter().map(type_ref).collect();
                    self.open(&format!("}} catch ({} {}) {{", types.join(" | "), c.name));
                    self.stmts(&c.body);
                    self.indent -= 1;
                }
                if let Some(f) = finally {
                    self.open("} finally {");
                    self.stmts(f);
                    self.indent -= 1;
                }
                self.line("}");
            }
            Stmt::Switch { selector, cases } => {
                self.open(&format!("switch ({}) {{", print_expr(selector)));
                for (i, group) in cases.iter().enumerate() {
                    self.open(&format!("case {i}:"));
                    self.stmts(group);
                    self.indent -= 1;
                }
                self.close("}");
            }
            Stmt::Synchronized { lock, body } => self.block(&format!("synchronized ({}) ", print_expr(lock)), body, ""),
            Stmt::Throw(e) => self.line(&format!("throw {};", print_expr(e))),
            Stmt::Return(e, _) => match e {
                Some(e) => self.line(&format!("return {};", print_expr(e))),
                None => self.line("return;"),
            },
            Stmt::Break => self.line("break;"),
            Stmt::Continue => self.line("continue;"),
            Stmt::Labeled(l, inner) => {
                self.line(&format!("{l}:"));
                self.stmt(inner);
            }
            Stmt::Empty => self.line(";"),
            Stmt::Opaque { calls, .. } => {
                for c in calls {
                    self.line(&format!("{};", print_expr(c)));
                }
            }
        }
    }

    fn args(&mut self, args: &[Expr]) {
        self.out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(a);
        }
        self.out.push(')');
    }

    /// Operands that are not primaries get parentheses.
    fn operand(&mut self, e: &Expr) {
        let compound = matches!(
            e,
            Expr::Assign { .. }
                | Expr::Binary { .. }
                | Expr::Unary { .. }
                | Expr::Conditional { .. }
                | Expr::Cast { .. }
                | Expr::InstanceOf { .. }
                | Expr::Lambda { .. }
        );
        if compound {
            self.out.push('(');
            self.expr(e);
            self.out.push(')');
        } else {
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Name(n) => self.out.push_str(n),
            Expr::Literal(_, s) => self.out.push_str(s),
            Expr::This => self.out.push_str("this"),
            Expr::Super => self.out.push_str("super"),
            Expr::ClassLit(t) => {
                let _ = write!(self.out, "{}.class", type_ref(t));
            }
            Expr::FieldAccess { target, name } => {
                self.operand(target);
                let _ = write!(self.out, ".{name}");
            }
            Expr::Call { target, name, args, .. } => {
                if let Some(t) = target {
                    self.operand(t);
                    self.out.push('.');
                }
                self.out.push_str(name);
                self.args(args);
            }
            Expr::New { ty, args, body, .. } => {
                let _ = write!(self.out, "new {}", type_ref(ty));
                self.args(args);
                if let Some(methods) = body {
                    let mut inner = Printer { out: String::new(), indent: self.indent + 1 };
                    for m in methods {
                        inner.method(m);
                    }
                    self.out.push_str(" {\n");
                    self.out.push_str(&inner.out);
                    for _ in 0..self.indent {
                        self.out.push_str("    ");
                    }
                    self.out.push('}');
                }
            }
            Expr::NewArray { ty, dims, init } => {
                let base = TypeRef { array_dims: 0, ..ty.clone() };
                let _ = write!(self.out, "new {}", type_ref(&base));
                for d in dims {
                    self.out.push('[');
                    self.expr(d);
                    self.out.push(']');
                }
                for _ in dims.len()..ty.array_dims as usize {
                    self.out.push_str("[]");
                }
                if let Some(items) = init {
                    self.array_init(items);
                }
            }
            Expr::ArrayInit(items) => self.array_init(items),
            Expr::Assign { target, op, value } => {
                self.operand(target);
                let _ = write!(self.out, " {op} ");
                self.operand(value);
            }
            Expr::Binary { op, lhs, rhs } => {
                self.operand(lhs);
                let _ = write!(self.out, " {op} ");
                self.operand(rhs);
            }
            Expr::Unary { op, operand, postfix } => {
                if *postfix {
                    self.operand(operand);
                    self.out.push_str(op);
                } else {
                    self.out.push_str(op);
                    self.operand(operand);
                }
            }
            Expr::Conditional { cond, then, otherwise } => {
                self.operand(cond);
                self.out.push_str(" ? ");
                self.operand(then);
                self.out.push_str(" : ");
                self.operand(otherwise);
            }
            Expr::Cast { ty, expr } => {
                let _ = write!(self.out, "({}) ", type_ref(ty));
                self.operand(expr);
            }
            Expr::InstanceOf { expr, ty } => {
                self.operand(expr);
                let _ = write!(self.out, " instanceof {}", type_ref(ty));
            }
            Expr::Index { target, index } => {
                self.operand(target);
                self.out.push('[');
                self.expr(index);
                self.out.push(']');
            }
            Expr::Lambda { params, body } => {
                let _ = write!(self.out, "({}) -> ", params.join(", "));
                match body {
                    LambdaBody::Expr(x) => self.operand(x),
                    LambdaBody::Block(b) => {
                        let mut inner = Printer { out: String::new(), indent: self.indent + 1 };
                        inner.stmts(b);
                        self.out.push_str("{\n");
                        self.out.push_str(&inner.out);
                        for _ in 0..self.indent {
                            self.out.push_str("    ");
                        }
                        self.out.push('}');
                    }
                }
            }
            Expr::MethodRef { target, name } => {
                self.operand(target);
                let _ = write!(self.out, "::{name}");
            }
            Expr::Opaque { calls } => {
                self.out.push_str("__opaque");
                self.args(calls);
            }
        }
    }

    fn array_init(&mut self, items: &[Expr]) {
        self.out.push('{');
        for (i, a) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(a);
        }
        self.out.push('}');
    }
}
