use super::ast::*;

/// Visits every statement (pre-order), descending into nested blocks,
/// lambda bodies and anonymous class bodies.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        walk_stmt(s, f, &mut |_| {});
    }
}

/// Visits every expression in evaluation order (operands before the
/// operation that consumes them).
pub fn walk_exprs<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Expr)) {
    for s in stmts {
        walk_stmt(s, &mut |_| {}, f);
    }
}

fn walk_stmt<'a>(s: &'a Stmt, fs: &mut dyn FnMut(&'a Stmt), fe: &mut dyn FnMut(&'a Expr)) {
    fs(s);
    match s {
        Stmt::Block(b) => b.iter().for_each(|x| walk_stmt(x, fs, fe)),
        Stmt::Synchronized { lock, body } => {
            walk_expr(lock, fs, fe);
            body.iter().for_each(|x| walk_stmt(x, fs, fe));
        }
        Stmt::LocalVar { vars, .. } => {
            for (_, init) in vars {
                if let Some(e) = init {
                    walk_expr(e, fs, fe);
                }
            }
        }
        Stmt::LocalType(ty) => {
            for m in &ty.methods {
                if let Some(body) = &m.body {
                    body.iter().for_each(|x| walk_stmt(x, fs, fe));
                }
            }
        }
        Stmt::Expr(e) | Stmt::Throw(e) => walk_expr(e, fs, fe),
        Stmt::If { cond, then, otherwise } => {
            walk_expr(cond, fs, fe);
            walk_stmt(then, fs, fe);
            if let Some(o) = otherwise {
                walk_stmt(o, fs, fe);
            }
        }
        Stmt::While { cond, body } => {
            walk_expr(cond, fs, fe);
            walk_stmt(body, fs, fe);
        }
        Stmt::DoWhile { body, cond } => {
            walk_stmt(body, fs, fe);
            walk_expr(cond, fs, fe);
        }
        Stmt::For { init, cond, update, body } => {
            init.iter().for_each(|x| walk_stmt(x, fs, fe));
            if let Some(c) = cond {
                walk_expr(c, fs, fe);
            }
            walk_stmt(body, fs, fe);
            update.iter().for_each(|x| walk_expr(x, fs, fe));
        }
        Stmt::ForEach { iterable, body, .. } => {
            walk_expr(iterable, fs, fe);
            walk_stmt(body, fs, fe);
        }
        Stmt::Try { resources, body, catches, finally } => {
            resources.iter().for_each(|x| walk_stmt(x, fs, fe));
            body.iter().for_each(|x| walk_stmt(x, fs, fe));
            for c in catches {
                c.body.iter().for_each(|x| walk_stmt(x, fs, fe));
            }
            if let Some(f) = finally {
                f.iter().for_each(|x| walk_stmt(x, fs, fe));
            }
        }
        Stmt::Switch { selector, cases } => {
            walk_expr(selector, fs, fe);
            for group in cases {
                group.iter().for_each(|x| walk_stmt(x, fs, fe));
            }
        }
        Stmt::Return(value, _) => {
            if let Some(e) = value {
                walk_expr(e, fs, fe);
            }
        }
        Stmt::Labeled(_, inner) => walk_stmt(inner, fs, fe),
        Stmt::Opaque { calls, .. } => calls.iter().for_each(|c| walk_expr(c, fs, fe)),
        Stmt::Break | Stmt::Continue | Stmt::Empty => {}
    }
}

fn walk_expr<'a>(e: &'a Expr, fs: &mut dyn FnMut(&'a Stmt), fe: &mut dyn FnMut(&'a Expr)) {
    match e {
        Expr::Name(_) | Expr::Literal(..) | Expr::This | Expr::Super | Expr::ClassLit(_) => {}
        Expr::FieldAccess { target, .. } => walk_expr(target, fs, fe),
        Expr::Call { target, args, .. } => {
            if let Some(t) = target {
                walk_expr(t, fs, fe);
            }
            args.iter().for_each(|a| walk_expr(a, fs, fe));
        }
        Expr::New { args, body, .. } => {
            args.iter().for_each(|a| walk_expr(a, fs, fe));
            fe(e);
            if let Some(methods) = body {
                for m in methods {
                    if let Some(b) = &m.body {
                        b.iter().for_each(|x| walk_stmt(x, fs, fe));
                    }
                }
            }
            return;
        }
        Expr::NewArray { dims, init, .. } => {
            dims.iter().for_each(|a| walk_expr(a, fs, fe));
            if let Some(items) = init {
                items.iter().for_each(|a| walk_expr(a, fs, fe));
            }
        }
        Expr::ArrayInit(items) => items.iter().for_each(|a| walk_expr(a, fs, fe)),
        Expr::Assign { target, value, .. } => {
            walk_expr(target, fs, fe);
            walk_expr(value, fs, fe);
        }
        Expr::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, fs, fe);
            walk_expr(rhs, fs, fe);
        }
        Expr::Unary { operand, .. } => walk_expr(operand, fs, fe),
        Expr::Conditional { cond, then, otherwise } => {
            walk_expr(cond, fs, fe);
            walk_expr(then, fs, fe);
            walk_expr(otherwise, fs, fe);
        }
        Expr::Cast { expr, .. } | Expr::InstanceOf { expr, .. } => walk_expr(expr, fs, fe),
        Expr::Index { target, index } => {
            walk_expr(target, fs, fe);
            walk_expr(index, fs, fe);
        }
        Expr::Lambda { body, .. } => match body {
            LambdaBody::Expr(x) => walk_expr(x, fs, fe),
            LambdaBody::Block(b) => b.iter().for_each(|x| walk_stmt(x, fs, fe)),
        },
        Expr::MethodRef { target, .. } => walk_expr(target, fs, fe),
        Expr::Opaque { calls } => calls.iter().for_each(|c| walk_expr(c, fs, fe)),
    }
    fe(e);
}

/// Renders simple receiver expressions (`a`, `a.b`, `this.x`) for diagnostics.
pub(crate) fn render_expr(e: &Expr) -> String {
    match e {
        Expr::Name(n) => n.clone(),
        Expr::This => "this".into(),
        Expr::Super => "super".into(),
        Expr::FieldAccess { target, name } => format!("{}.{}", render_expr(target), name),
        Expr::Call { target, name, .. } => match target {
            Some(t) => format!("{}.{}(..)", render_expr(t), name),
            None => format!("{name}(..)"),
        },
        Expr::New { ty, .. } => format!("new {}(..)", ty.name),
        Expr::Literal(_, s) => s.clone(),
        _ => "<expr>".into(),
    }
}

/// All call sites of a method in evaluation order, constructor calls included.
pub fn method_calls(method: &MethodDecl) -> Vec<CallExpr> {
    let mut out = Vec::new();
    if let Some(body) = &method.body {
        walk_exprs(body, &mut |e| match e {
            Expr::Call { target, name, args, line } => out.push(CallExpr {
                method_name: name.clone(),
                receiver: target.as_deref().map(render_expr),
                argument_count: args.len(),
                is_constructor: false,
                line: *line,
            }),
            Expr::New { ty, args, line, .. } => out.push(CallExpr {
                method_name: ty.simple_name().to_string(),
                receiver: None,
                argument_count: args.len(),
                is_constructor: true,
                line: *line,
            }),
            _ => {}
        });
    }
    out
}
