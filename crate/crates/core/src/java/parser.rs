//! Recursive-descent parser for the Java subset.
//!
//! Declarations are parsed strictly; anything inside a method body that the
//! subset does not model is skipped to the next statement boundary and kept as
//! [`Stmt::Opaque`] with the calls it contains.

use super::ast::*;
use super::keywords::is_reserved;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

type PResult<T> = Result<T, SyntaxError>;

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

pub fn parse(source: &str) -> Result<CompilationUnit, SyntaxError> {
    let toks = tokenize(source).map_err(|e| SyntaxError {
        line: e.line,
        col: e.col,
        message: e.message,
    })?;
    let mut p = Parser { toks: &toks, pos: 0 };
    p.compilation_unit()
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'t Token> {
        self.toks.get(self.pos + ahead)
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(w))
    }

    fn at_eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn line(&self) -> u32 {
        self.peek()
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn prev_line(&self) -> u32 {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.toks.get(i))
            .map_or(1, |t| t.line)
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = self
            .peek()
            .or_else(|| self.toks.last())
            .map_or((1, 1), |t| (t.line, t.col));
        Err(SyntaxError { line, col, message: message.into() })
    }

    fn bump(&mut self) -> Option<&'t Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.at_word(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |t| t.text.clone());
            self.err(format!("expected `{op}`, found `{found}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.is_ident() && !is_reserved(&t.text) => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => {
                let found = self.peek().map_or("end of input".to_string(), |t| t.text.clone());
                self.err(format!("expected identifier, found `{found}`"))
            }
        }
    }

    /// Skips a balanced `open ... close` group starting at the current token.
    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect_op(open)?;
        let mut depth = 1usize;
        while depth > 0 {
            match self.bump() {
                Some(t) if t.is_op(open) => depth += 1,
                Some(t) if t.is_op(close) => depth -= 1,
                Some(_) => {}
                None => return self.err(format!("unbalanced `{open}`")),
            }
        }
        Ok(())
    }

    fn skip_type_params(&mut self) -> PResult<()> {
        if self.at_op("<") {
            self.skip_balanced("<", ">")?;
        }
        Ok(())
    }

    fn qualified_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        while self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_ident()) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.bump().map(|t| t.text.clone()).unwrap_or_default());
        }
        Ok(name)
    }

    // ---- declarations --------------------------------------------------

    fn compilation_unit(&mut self) -> PResult<CompilationUnit> {
        let mut unit = CompilationUnit::default();
        let save = self.pos;
        self.annotations()?;
        if self.eat_word("package") {
            unit.package_name = self.qualified_name()?;
            self.expect_op(";")?;
        } else {
            self.pos = save;
        }
        loop {
            if self.eat_op(";") {
                continue;
            }
            if !self.at_word("import") {
                break;
            }
            self.pos += 1;
            let is_static = self.eat_word("static");
            let mut name = self.ident()?;
            let mut is_wildcard = false;
            while self.eat_op(".") {
                if self.eat_op("*") {
                    is_wildcard = true;
                    break;
                }
                name.push('.');
                name.push_str(&self.ident()?);
            }
            self.expect_op(";")?;
            unit.imports.push(ImportDecl { qualified_name: name, is_wildcard, is_static });
        }
        while !self.at_eof() {
            if self.eat_op(";") {
                continue;
            }
            let start = self.pos;
            self.modifiers()?;
            match self.type_decl(start)? {
                Some(ty) => unit.types.push(ty),
                None => {
                    // module-info and other top-level forms are outside the subset
                    if self.at_word("module") || self.at_word("open") {
                        while !self.at_eof() {
                            self.bump();
                        }
                        break;
                    }
                    let found = self.peek().map_or(String::new(), |t| t.text.clone());
                    return self.err(format!("expected type declaration, found `{found}`"));
                }
            }
        }
        Ok(unit)
    }

    /// Annotation names; arguments are skipped.
    fn annotations(&mut self) -> PResult<Vec<String>> {
        let mut names = Vec::new();
        while self.at_op("@") && !self.peek_at(1).is_some_and(|t| t.is_word("interface")) {
            self.pos += 1;
            names.push(self.qualified_name()?);
            if self.at_op("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(names)
    }

    /// Modifiers and annotations in any order; returns annotation names.
    fn modifiers(&mut self) -> PResult<Vec<String>> {
        let mut annotations = Vec::new();
        loop {
            if self.at_op("@") && !self.peek_at(1).is_some_and(|t| t.is_word("interface")) {
                annotations.extend(self.annotations()?);
            } else if self.peek().is_some_and(|t| t.is_ident() && MODIFIERS.contains(&t.text.as_str())) {
                // `default` as a switch label never reaches here
                self.pos += 1;
            } else if self.at_word("non")
                && self.peek_at(1).is_some_and(|t| t.is_op("-"))
                && self.peek_at(2).is_some_and(|t| t.is_word("sealed"))
            {
                self.pos += 3;
            } else {
                return Ok(annotations);
            }
        }
    }

    fn type_list(&mut self) -> PResult<Vec<TypeRef>> {
        let mut out = vec![self.parse_type()?];
        while self.eat_op(",") {
            out.push(self.parse_type()?);
        }
        Ok(out)
    }

    /// Parses a type declaration after its modifiers. `None` if no declaration keyword follows.
    fn type_decl(&mut self, start: usize) -> PResult<Option<TypeDecl>> {
        let start_line = self.toks.get(start).map_or(1, |t| t.line);
        let kind = if self.eat_word("class") {
            TypeKind::Class
        } else if self.eat_word("interface") {
            TypeKind::Interface
        } else if self.eat_word("enum") {
            TypeKind::Enum
        } else if self.at_word("record") && self.peek_at(1).is_some_and(|t| t.is_ident()) && self.peek_at(2).is_some_and(|t| t.is_op("(") || t.is_op("<")) {
            self.pos += 1;
            TypeKind::Record
        } else if self.at_op("@") && self.peek_at(1).is_some_and(|t| t.is_word("interface")) {
            self.pos += 2;
            TypeKind::Annotation
        } else {
            return Ok(None);
        };
        let name = self.ident()?;
        self.skip_type_params()?;
        let mut record_fields = Vec::new();
        if kind == TypeKind::Record {
            self.expect_op("(")?;
            while !self.at_op(")") {
                self.modifiers()?;
                let ty = self.parse_type()?;
                self.eat_op("...");
                let pname = self.ident()?;
                record_fields.push(FieldDecl { name: pname, ty });
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op(")")?;
        }
        let mut extends = Vec::new();
        let mut implements = Vec::new();
        loop {
            if self.eat_word("extends") {
                extends.extend(self.type_list()?);
            } else if self.eat_word("implements") {
                implements.extend(self.type_list()?);
            } else if self.eat_word("permits") {
                self.type_list()?;
            } else {
                break;
            }
        }
        let mut decl = TypeDecl {
            name,
            kind,
            extends,
            implements,
            fields: record_fields,
            methods: Vec::new(),
            nested: Vec::new(),
            span: LineSpan::new(start_line, start_line),
        };
        self.class_body(&mut decl)?;
        decl.span = LineSpan::new(start_line, self.prev_line());
        Ok(Some(decl))
    }

    fn class_body(&mut self, decl: &mut TypeDecl) -> PResult<()> {
        self.expect_op("{")?;
        if decl.kind == TypeKind::Enum {
            self.skip_enum_constants()?;
        }
        loop {
            if self.eat_op("}") {
                return Ok(());
            }
            if self.at_eof() {
                return self.err("unexpected end of input in class body");
            }
            let save = self.pos;
            if let Err(e) = self.member(decl) {
                // recover at member granularity; an unbalanced body is fatal
                self.pos = save;
                if !self.skip_member()? {
                    return Err(e);
                }
            }
        }
    }

    fn skip_enum_constants(&mut self) -> PResult<()> {
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else {
                return self.err("unexpected end of input in enum body");
            };
            if depth == 0 && (t.is_op(";") || t.is_op("}")) {
                self.eat_op(";");
                return Ok(());
            }
            if t.is_op("(") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("}") {
                depth -= 1;
            }
            self.pos += 1;
        }
    }

    /// Skips one member after a parse failure. Returns false at end of input.
    fn skip_member(&mut self) -> PResult<bool> {
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            if depth == 0 && t.is_op("}") {
                return Ok(true);
            }
            self.pos += 1;
            if t.is_op("(") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") {
                depth = depth.saturating_sub(1);
            } else if t.is_op("{") {
                self.pos -= 1;
                self.skip_balanced("{", "}")?;
                if depth == 0 {
                    self.eat_op(";");
                    return Ok(true);
                }
            } else if depth == 0 && t.is_op(";") {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn member(&mut self, decl: &mut TypeDecl) -> PResult<()> {
        if self.eat_op(";") {
            return Ok(());
        }
        let start = self.pos;
        // initializer blocks
        if self.at_op("{") || (self.at_word("static") && self.peek_at(1).is_some_and(|t| t.is_op("{"))) {
            self.eat_word("static");
            return self.skip_balanced("{", "}");
        }
        let annotations = self.modifiers()?;
        if let Some(nested) = self.type_decl(start)? {
            decl.nested.push(nested);
            return Ok(());
        }
        self.skip_type_params()?;
        // constructor (compact record constructors have no parameter list)
        if self.at_word(&decl.name) && self.peek_at(1).is_some_and(|t| t.is_op("(") || t.is_op("{")) {
            let name = self.ident()?;
            let m = self.method_rest(start, name, annotations, TypeRef::simple("void"), true)?;
            decl.methods.push(m);
            return Ok(());
        }
        let ty = self.parse_type()?;
        let name = self.ident()?;
        if self.at_op("(") {
            let m = self.method_rest(start, name, annotations, ty, false)?;
            decl.methods.push(m);
            return Ok(());
        }
        // field declarators
        let mut name = name;
        loop {
            let mut fty = ty.clone();
            while self.at_op("[") {
                self.skip_balanced("[", "]")?;
                fty.array_dims += 1;
            }
            decl.fields.push(FieldDecl { name: name.clone(), ty: fty });
            if self.eat_op("=") {
                self.skip_initializer()?;
            }
            if self.eat_op(",") {
                name = self.ident()?;
                continue;
            }
            self.expect_op(";")?;
            return Ok(());
        }
    }

    fn skip_initializer(&mut self) -> PResult<()> {
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            if depth == 0 && (t.is_op(",") || t.is_op(";")) {
                return Ok(());
            }
            if t.is_op("(") || t.is_op("{") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("}") || t.is_op("]") {
                if depth == 0 {
                    return self.err("unbalanced initializer");
                }
                depth -= 1;
            }
            self.pos += 1;
        }
        self.err("unexpected end of input in initializer")
    }

    fn method_rest(
        &mut self,
        start: usize,
        name: String,
        annotations: Vec<String>,
        return_type: TypeRef,
        is_constructor: bool,
    ) -> PResult<MethodDecl> {
        let mut params = Vec::new();
        if self.eat_op("(") {
            while !self.at_op(")") {
                self.modifiers()?;
                let mut ty = self.parse_type()?;
                if self.eat_op("...") {
                    ty.array_dims += 1;
                }
                // receiver parameter `Foo this`
                let pname = if self.eat_word("this") { "this".to_string() } else { self.ident()? };
                while self.at_op("[") {
                    self.skip_balanced("[", "]")?;
                    ty.array_dims += 1;
                }
                params.push(Param { ty, name: pname });
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op(")")?;
        }
        let mut return_type = return_type;
        while self.at_op("[") {
            self.skip_balanced("[", "]")?;
            return_type.array_dims += 1;
        }
        let mut thrown_types = Vec::new();
        if self.eat_word("throws") {
            thrown_types = self.type_list()?;
        }
        let body = if self.eat_op(";") {
            None
        } else if self.eat_word("default") {
            self.skip_initializer()?;
            self.expect_op(";")?;
            None
        } else {
            Some(self.block()?)
        };
        let end = self.pos;
        let span = LineSpan::new(self.toks[start].line, self.toks[end - 1].line);
        let last = &self.toks[end - 1];
        let source_range = (self.toks[start].offset, last.offset + last.text.len());
        let tokens = self.toks[start..end]
            .iter()
            .filter(|t| matches!(t.kind, TokenKind::Ident | TokenKind::Number | TokenKind::Char))
            .map(|t| t.text.clone())
            .collect();
        Ok(MethodDecl {
            name,
            annotations,
            params,
            return_type,
            thrown_types,
            body,
            span,
            source_range,
            is_constructor,
            tokens,
        })
    }

    // ---- types ---------------------------------------------------------

    fn parse_type(&mut self) -> PResult<TypeRef> {
        self.annotations()?;
        if self.eat_op("?") {
            let mut t = TypeRef::simple("?");
            if self.eat_word("extends") || self.eat_word("super") {
                t.args.push(self.parse_type()?);
            }
            return Ok(t);
        }
        let mut name = self.ident_or_primitive()?;
        let mut args = Vec::new();
        loop {
            if self.at_op("<") {
                args = self.type_args()?;
            }
            if self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_ident() && !t.is_word("class") && !t.is_word("this") && !t.is_word("new")) {
                self.pos += 1;
                self.annotations()?;
                name.push('.');
                name.push_str(&self.ident()?);
                continue;
            }
            break;
        }
        let mut array_dims = 0;
        while self.at_op("[") && self.peek_at(1).is_some_and(|t| t.is_op("]")) {
            self.pos += 2;
            array_dims += 1;
        }
        // intersection bounds only appear inside type arguments
        Ok(TypeRef { name, args, array_dims })
    }

    fn ident_or_primitive(&mut self) -> PResult<String> {
        const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double", "void"];
        if let Some(t) = self.peek() {
            if t.is_ident() && PRIMITIVES.contains(&t.text.as_str()) {
                self.pos += 1;
                return Ok(t.text.clone());
            }
        }
        self.ident()
    }

    fn type_args(&mut self) -> PResult<Vec<TypeRef>> {
        self.expect_op("<")?;
        let mut out = Vec::new();
        if self.eat_op(">") {
            return Ok(out); // diamond
        }
        loop {
            out.push(self.parse_type()?);
            while self.eat_op("&") {
                out.push(self.parse_type()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(">")?;
        Ok(out)
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op("{")?;
        let mut stmts = Vec::new();
        loop {
            if self.eat_op("}") {
                return Ok(stmts);
            }
            if self.at_eof() {
                return self.err("unexpected end of input in block");
            }
            stmts.push(self.statement()?);
        }
    }

    /// A statement, degrading to [`Stmt::Opaque`] when the subset cannot model it.
    /// Only unbalanced delimiters propagate as errors.
    fn statement(&mut self) -> PResult<Stmt> {
        let save = self.pos;
        match self.statement_strict() {
            Ok(s) => Ok(s),
            Err(_) => {
                self.pos = save;
                self.opaque_statement()
            }
        }
    }

    fn opaque_statement(&mut self) -> PResult<Stmt> {
        let start = self.pos;
        let line = self.line();
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else {
                return self.err("unexpected end of input in statement");
            };
            if depth == 0 && t.is_op("}") {
                if self.pos == start {
                    return self.err("unexpected `}`");
                }
                break;
            }
            if t.is_op("{") {
                self.skip_balanced("{", "}")?;
                let continues = self.peek().is_some_and(|n| {
                    n.is_word("else") || n.is_word("catch") || n.is_word("finally") || n.is_word("while")
                        || n.is_op(")") || n.is_op(",") || n.is_op(".") || n.is_op(";")
                });
                if depth == 0 && !continues {
                    break;
                }
                continue;
            }
            self.pos += 1;
            if t.is_op("(") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") {
                depth = depth.saturating_sub(1);
            } else if depth == 0 && t.is_op(";") {
                break;
            }
        }
        let calls = scan_calls(&self.toks[start..self.pos]);
        Ok(Stmt::Opaque { calls, line })
    }

    fn statement_strict(&mut self) -> PResult<Stmt> {
        let Some(t) = self.peek() else {
            return self.err("unexpected end of input");
        };
        let line = t.line;
        if t.is_op("{") {
            return Ok(Stmt::Block(self.block()?));
        }
        if t.is_op(";") {
            self.pos += 1;
            return Ok(Stmt::Empty);
        }
        if t.is_ident() {
            // label
            if !is_reserved(&t.text) && self.peek_at(1).is_some_and(|n| n.is_op(":")) {
                self.pos += 2;
                let inner = self.statement()?;
                return Ok(Stmt::Labeled(t.text.clone(), Box::new(inner)));
            }
            match t.text.as_str() {
                "if" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let then = Box::new(self.statement()?);
                    let otherwise = if self.eat_word("else") { Some(Box::new(self.statement()?)) } else { None };
                    return Ok(Stmt::If { cond, then, otherwise });
                }
                "while" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let body = Box::new(self.statement()?);
                    return Ok(Stmt::While { cond, body });
                }
                "do" => {
                    self.pos += 1;
                    let body = Box::new(self.statement()?);
                    if !self.eat_word("while") {
                        return self.err("expected `while`");
                    }
                    let cond = self.paren_expr()?;
                    self.expect_op(";")?;
                    return Ok(Stmt::DoWhile { body, cond });
                }
                "for" => return self.for_statement(),
                "try" => return self.try_statement(),
                "switch" => {
                    self.pos += 1;
                    return self.switch_statement();
                }
                "synchronized" => {
                    self.pos += 1;
                    let lock = self.paren_expr()?;
                    let body = self.block()?;
                    return Ok(Stmt::Synchronized { lock, body });
                }
                "return" => {
                    self.pos += 1;
                    let value = if self.at_op(";") { None } else { Some(self.expr()?) };
                    self.expect_op(";")?;
                    return Ok(Stmt::Return(value, line));
                }
                "throw" => {
                    self.pos += 1;
                    let value = self.expr()?;
                    self.expect_op(";")?;
                    return Ok(Stmt::Throw(value));
                }
                "break" | "continue" => {
                    self.pos += 1;
                    if self.peek().is_some_and(|t| t.is_ident()) {
                        self.pos += 1;
                    }
                    self.expect_op(";")?;
                    return Ok(if t.text == "break" { Stmt::Break } else { Stmt::Continue });
                }
                "assert" => {
                    self.pos += 1;
                    let mut parts = vec![Stmt::Expr(self.expr()?)];
                    if self.eat_op(":") {
                        parts.push(Stmt::Expr(self.expr()?));
                    }
                    self.expect_op(";")?;
                    return Ok(Stmt::Block(parts));
                }
                "yield" if self.peek_at(1).is_some_and(|n| !n.is_op("=") && !n.is_op("(") && !n.is_op(".")) => {
                    self.pos += 1;
                    let value = self.expr()?;
                    self.expect_op(";")?;
                    return Ok(Stmt::Expr(value));
                }
                "class" | "interface" | "enum" | "abstract" | "static" => {
                    let start = self.pos;
                    self.modifiers()?;
                    if let Some(ty) = self.type_decl(start)? {
                        return Ok(Stmt::LocalType(Box::new(ty)));
                    }
                    return self.err("expected local type declaration");
                }
                _ => {}
            }
            if t.text == "record" && self.peek_at(1).is_some_and(|n| n.is_ident()) && self.peek_at(2).is_some_and(|n| n.is_op("(")) {
                let start = self.pos;
                if let Some(ty) = self.type_decl(start)? {
                    return Ok(Stmt::LocalType(Box::new(ty)));
                }
            }
        }
        if t.is_op("@") || t.is_word("final") {
            self.modifiers()?;
            if let Some(ty) = self.type_decl(self.pos)? {
                return Ok(Stmt::LocalType(Box::new(ty)));
            }
            let ty = self.parse_type()?;
            let vars = self.var_declarators()?;
            self.expect_op(";")?;
            return Ok(Stmt::LocalVar { ty, vars, line });
        }
        if let Some(decl) = self.try_local_var()? {
            self.expect_op(";")?;
            return Ok(decl);
        }
        let e = self.expr()?;
        self.expect_op(";")?;
        Ok(Stmt::Expr(e))
    }

    /// `Type name ...` at the current position, without the terminating `;`.
    fn try_local_var(&mut self) -> PResult<Option<Stmt>> {
        let save = self.pos;
        let line = self.line();
        if !self.peek().is_some_and(|t| t.is_ident()) {
            return Ok(None);
        }
        let Ok(ty) = self.parse_type() else {
            self.pos = save;
            return Ok(None);
        };
        let is_decl = self.peek().is_some_and(|t| t.is_ident() && (!is_reserved(&t.text) || t.is_word("var")))
            && self.peek_at(1).is_some_and(|n| n.is_op("=") || n.is_op(";") || n.is_op(",") || n.is_op("[") || n.is_op(":") || n.is_op(")"));
        if !is_decl {
            self.pos = save;
            return Ok(None);
        }
        let vars = self.var_declarators()?;
        Ok(Some(Stmt::LocalVar { ty, vars, line }))
    }

    fn var_declarators(&mut self) -> PResult<Vec<(String, Option<Expr>)>> {
        let mut vars = Vec::new();
        loop {
            let name = self.ident()?;
            while self.at_op("[") {
                self.skip_balanced("[", "]")?;
            }
            let init = if self.eat_op("=") {
                Some(if self.at_op("{") { self.array_init()? } else { self.expr()? })
            } else {
                None
            };
            vars.push((name, init));
            if !self.eat_op(",") {
                return Ok(vars);
            }
        }
    }

    fn array_init(&mut self) -> PResult<Expr> {
        self.expect_op("{")?;
        let mut items = Vec::new();
        while !self.at_op("}") {
            items.push(if self.at_op("{") { self.array_init()? } else { self.expr()? });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(Expr::ArrayInit(items))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_op("(")?;
        let e = self.expr()?;
        self.expect_op(")")?;
        Ok(e)
    }

    fn for_statement(&mut self) -> PResult<Stmt> {
        self.pos += 1;
        self.expect_op("(")?;
        // enhanced for
        let save = self.pos;
        self.modifiers()?;
        if let Ok(ty) = self.parse_type() {
            if let Ok(name) = self.ident() {
                if self.eat_op(":") {
                    let iterable = self.expr()?;
                    self.expect_op(")")?;
                    let body = Box::new(self.statement()?);
                    return Ok(Stmt::ForEach { ty, name, iterable, body });
                }
            }
        }
        self.pos = save;
        let mut init = Vec::new();
        if !self.at_op(";") {
            self.modifiers()?;
            if let Some(decl) = self.try_local_var()? {
                init.push(decl);
            } else {
                loop {
                    init.push(Stmt::Expr(self.expr()?));
                    if !self.eat_op(",") {
                        break;
                    }
                }
            }
        }
        self.expect_op(";")?;
        let cond = if self.at_op(";") { None } else { Some(self.expr()?) };
        self.expect_op(";")?;
        let mut update = Vec::new();
        while !self.at_op(")") {
            update.push(self.expr()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        let body = Box::new(self.statement()?);
        Ok(Stmt::For { init, cond, update, body })
    }

    fn try_statement(&mut self) -> PResult<Stmt> {
        self.pos += 1;
        let mut resources = Vec::new();
        if self.eat_op("(") {
            while !self.at_op(")") {
                self.modifiers()?;
                if let Some(decl) = self.try_local_var()? {
                    resources.push(decl);
                } else {
                    resources.push(Stmt::Expr(self.expr()?));
                }
                if !self.eat_op(";") {
                    break;
                }
            }
            self.expect_op(")")?;
        }
        let body = self.block()?;
        let mut catches = Vec::new();
        while self.eat_word("catch") {
            self.expect_op("(")?;
            self.modifiers()?;
            let mut types = vec![self.parse_type()?];
            while self.eat_op("|") {
                types.push(self.parse_type()?);
            }
            let name = self.ident()?;
            self.expect_op(")")?;
            let body = self.block()?;
            catches.push(CatchClause { types, name, body });
        }
        let finally = if self.eat_word("finally") { Some(self.block()?) } else { None };
        if catches.is_empty() && finally.is_none() && resources.is_empty() {
            return self.err("`try` without `catch` or `finally`");
        }
        Ok(Stmt::Try { resources, body, catches, finally })
    }

    fn switch_statement(&mut self) -> PResult<Stmt> {
        let selector = self.paren_expr()?;
        self.expect_op("{")?;
        let mut cases: Vec<Vec<Stmt>> = Vec::new();
        loop {
            if self.eat_op("}") {
                break;
            }
            if self.eat_word("case") || self.eat_word("default") {
                let mut depth = 0usize;
                let arrow = loop {
                    let Some(t) = self.bump() else {
                        return self.err("unexpected end of input in switch label");
                    };
                    if t.is_op("(") {
                        depth += 1;
                    } else if t.is_op(")") {
                        depth = depth.saturating_sub(1);
                    } else if depth == 0 && t.is_op(":") {
                        break false;
                    } else if depth == 0 && t.is_op("->") {
                        break true;
                    }
                };
                if arrow {
                    let stmt = if self.at_op("{") {
                        Stmt::Block(self.block()?)
                    } else if self.at_word("throw") {
                        self.statement_strict()?
                    } else {
                        let e = self.expr()?;
                        self.expect_op(";")?;
                        Stmt::Expr(e)
                    };
                    cases.push(vec![stmt]);
                } else {
                    cases.push(Vec::new());
                }
                continue;
            }
            let stmt = self.statement()?;
            match cases.last_mut() {
                Some(group) => group.push(stmt),
                None => return self.err("statement before first switch label"),
            }
        }
        Ok(Stmt::Switch { selector, cases })
    }

    // ---- expressions ---------------------------------------------------

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        if let Some(lambda) = self.try_lambda()? {
            return Ok(lambda);
        }
        let lhs = self.ternary()?;
        if let Some((op, n)) = self.assign_op() {
            self.pos += n;
            let value = if self.at_op("{") { self.array_init()? } else { self.expr()? };
            return Ok(Expr::Assign { target: Box::new(lhs), op, value: Box::new(value) });
        }
        Ok(lhs)
    }

    fn assign_op(&self) -> Option<(String, usize)> {
        let t = self.peek()?;
        if t.kind != TokenKind::Op {
            return None;
        }
        match t.text.as_str() {
            "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<=" => Some((t.text.clone(), 1)),
            ">" => {
                let joined = |i: usize, op: &str| {
                    self.peek_at(i - 1).is_some_and(|p| p.joined) && self.peek_at(i).is_some_and(|n| n.is_op(op))
                };
                if joined(1, ">") && joined(2, "=") {
                    Some((">>=".into(), 3))
                } else if joined(1, ">") && joined(2, ">") && joined(3, "=") {
                    Some((">>>=".into(), 4))
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    fn try_lambda(&mut self) -> PResult<Option<Expr>> {
        let params = if self.peek().is_some_and(|t| t.is_ident()) && self.peek_at(1).is_some_and(|t| t.is_op("->")) {
            let p = self.bump().map(|t| t.text.clone()).unwrap_or_default();
            self.pos += 1;
            vec![p]
        } else if self.at_op("(") {
            // find matching paren and check for `->`
            let mut depth = 0usize;
            let mut i = self.pos;
            loop {
                let Some(t) = self.toks.get(i) else { return Ok(None) };
                if t.is_op("(") {
                    depth += 1;
                } else if t.is_op(")") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                i += 1;
            }
            if !self.toks.get(i + 1).is_some_and(|t| t.is_op("->")) {
                return Ok(None);
            }
            // parameter names are identifiers directly before `,` or `)`
            let params = (self.pos + 1..i)
                .filter(|&j| self.toks[j].is_ident() && (self.toks[j + 1].is_op(",") || self.toks[j + 1].is_op(")")))
                .map(|j| self.toks[j].text.clone())
                .collect();
            self.pos = i + 2;
            params
        } else {
            return Ok(None);
        };
        let body = if self.at_op("{") {
            LambdaBody::Block(self.block()?)
        } else {
            LambdaBody::Expr(Box::new(self.expr()?))
        };
        Ok(Some(Expr::Lambda { params, body }))
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if self.eat_op("?") {
            let then = self.expr()?;
            self.expect_op(":")?;
            let otherwise = if let Some(l) = self.try_lambda()? { l } else { self.ternary()? };
            return Ok(Expr::Conditional { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) });
        }
        Ok(cond)
    }

    /// Binary operator at the current position: (operator, precedence, token count).
    fn binary_op(&self) -> Option<(String, u8, usize)> {
        let t = self.peek()?;
        if t.is_word("instanceof") {
            return Some(("instanceof".into(), 7, 1));
        }
        if t.kind != TokenKind::Op {
            return None;
        }
        let joined = |i: usize, op: &str| {
            self.peek_at(i - 1).is_some_and(|p| p.joined) && self.peek_at(i).is_some_and(|n| n.is_op(op))
        };
        let (op, prec, n): (&str, u8, usize) = match t.text.as_str() {
            "||" => ("||", 1, 1),
            "&&" => ("&&", 2, 1),
            "|" => ("|", 3, 1),
            "^" => ("^", 4, 1),
            "&" => ("&", 5, 1),
            "==" => ("==", 6, 1),
            "!=" => ("!=", 6, 1),
            "<=" => ("<=", 7, 1),
            "<" => ("<", 7, 1),
            ">" => {
                if joined(1, ">") && joined(2, ">") {
                    if joined(3, "=") {
                        return None;
                    }
                    (">>>", 8, 3)
                } else if joined(1, ">") {
                    if joined(2, "=") {
                        return None;
                    }
                    (">>", 8, 2)
                } else if joined(1, "=") {
                    (">=", 7, 2)
                } else if joined(1, "==") {
                    // `a>==b` is not Java; treat as `>=` followed by `=`
                    return None;
                } else {
                    (">", 7, 1)
                }
            }
            "<<" => ("<<", 8, 1),
            "+" => ("+", 9, 1),
            "-" => ("-", 9, 1),
            "*" => ("*", 10, 1),
            "/" => ("/", 10, 1),
            "%" => ("%", 10, 1),
            _ => return None,
        };
        Some((op.to_string(), prec, n))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some((op, prec, n)) = self.binary_op() {
            if prec <= min_prec {
                break;
            }
            self.pos += n;
            if op == "instanceof" {
                self.eat_word("final");
                let ty = self.parse_type()?;
                // pattern binding
                if self.peek().is_some_and(|t| t.is_ident() && !is_reserved(&t.text)) {
                    self.pos += 1;
                }
                lhs = Expr::InstanceOf { expr: Box::new(lhs), ty };
                continue;
            }
            let rhs = self.binary(prec)?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Op && matches!(t.text.as_str(), "+" | "-" | "++" | "--" | "!" | "~") {
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(Expr::Unary { op: t.text.clone(), operand: Box::new(operand), postfix: false });
            }
            if t.is_op("(") {
                if let Some(cast) = self.try_cast()? {
                    return Ok(cast);
                }
            }
        }
        let mut e = self.postfix()?;
        while let Some(t) = self.peek() {
            if t.is_op("++") || t.is_op("--") {
                self.pos += 1;
                e = Expr::Unary { op: t.text.clone(), operand: Box::new(e), postfix: true };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn try_cast(&mut self) -> PResult<Option<Expr>> {
        const PRIMITIVES: &[&str] = &["boolean", "byte", "char", "short", "int", "long", "float", "double"];
        let save = self.pos;
        self.pos += 1;
        let Ok(ty) = self.parse_type() else {
            self.pos = save;
            return Ok(None);
        };
        while self.eat_op("&") {
            if self.parse_type().is_err() {
                self.pos = save;
                return Ok(None);
            }
        }
        if !self.eat_op(")") {
            self.pos = save;
            return Ok(None);
        }
        let primitive = ty.array_dims == 0 && PRIMITIVES.contains(&ty.name.as_str());
        let starts_operand = self.peek().is_some_and(|t| match t.kind {
            TokenKind::Ident => !matches!(t.text.as_str(), "instanceof"),
            TokenKind::Number | TokenKind::Str | TokenKind::Char => true,
            TokenKind::Op => {
                t.is_op("(") || t.is_op("!") || t.is_op("~") || (primitive && (t.is_op("+") || t.is_op("-") || t.is_op("++") || t.is_op("--")))
            }
        });
        if !starts_operand {
            self.pos = save;
            return Ok(None);
        }
        let expr = if let Some(l) = self.try_lambda()? { l } else { self.unary()? };
        Ok(Some(Expr::Cast { ty, expr: Box::new(expr) }))
    }

    fn arguments(&mut self) -> PResult<Vec<Expr>> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        while !self.at_op(")") {
            args.push(self.expr()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.at_op(".") {
                self.pos += 1;
                if self.at_op("<") {
                    self.skip_balanced("<", ">")?;
                }
                if self.eat_word("new") {
                    e = self.creator()?;
                    continue;
                }
                if self.eat_word("class") {
                    e = Expr::ClassLit(expr_to_type(&e));
                    continue;
                }
                if self.eat_word("this") {
                    e = Expr::This;
                    continue;
                }
                let line = self.line();
                let name = if self.eat_word("super") { "super".to_string() } else { self.ident()? };
                if self.at_op("(") {
                    let args = self.arguments()?;
                    e = Expr::Call { target: Some(Box::new(e)), name, args, line };
                } else {
                    e = Expr::FieldAccess { target: Box::new(e), name };
                }
            } else if self.at_op("[") {
                self.pos += 1;
                if self.eat_op("]") {
                    // `Type[].class` / `Type[]::new`
                    let mut ty = expr_to_type(&e);
                    ty.array_dims += 1;
                    while self.at_op("[") {
                        self.skip_balanced("[", "]")?;
                        ty.array_dims += 1;
                    }
                    if self.eat_op(".") && self.eat_word("class") {
                        e = Expr::ClassLit(ty);
                        continue;
                    }
                    if self.at_op("::") {
                        e = Expr::ClassLit(ty);
                        continue;
                    }
                    return self.err("unexpected `[]` in expression");
                }
                let index = self.expr()?;
                self.expect_op("]")?;
                e = Expr::Index { target: Box::new(e), index: Box::new(index) };
            } else if self.at_op("::") {
                self.pos += 1;
                let name = if self.eat_word("new") { "new".to_string() } else { self.ident()? };
                e = Expr::MethodRef { target: Box::new(e), name };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else {
            return self.err("unexpected end of input in expression");
        };
        let line = t.line;
        match t.kind {
            TokenKind::Number => {
                self.pos += 1;
                return Ok(Expr::Literal(LiteralKind::Number, t.text.clone()));
            }
            TokenKind::Str => {
                self.pos += 1;
                return Ok(Expr::Literal(LiteralKind::Str, t.text.clone()));
            }
            TokenKind::Char => {
                self.pos += 1;
                return Ok(Expr::Literal(LiteralKind::Char, t.text.clone()));
            }
            TokenKind::Op => {
                if t.is_op("(") {
                    return self.paren_expr();
                }
                if t.is_op("<") {
                    // generic method call without target
                    self.skip_balanced("<", ">")?;
                    let name = self.ident()?;
                    let args = self.arguments()?;
                    return Ok(Expr::Call { target: None, name, args, line });
                }
                return self.err(format!("unexpected `{}` in expression", t.text));
            }
            TokenKind::Ident => {}
        }
        match t.text.as_str() {
            "true" | "false" => {
                self.pos += 1;
                Ok(Expr::Literal(LiteralKind::Bool, t.text.clone()))
            }
            "null" => {
                self.pos += 1;
                Ok(Expr::Literal(LiteralKind::Null, t.text.clone()))
            }
            "this" | "super" => {
                self.pos += 1;
                if self.at_op("(") {
                    // explicit constructor invocation
                    let args = self.arguments()?;
                    return Ok(Expr::Call { target: None, name: t.text.clone(), args, line });
                }
                Ok(if t.text == "this" { Expr::This } else { Expr::Super })
            }
            "new" => {
                self.pos += 1;
                self.creator()
            }
            "switch" => {
                // switch expressions are kept opaque
                let start = self.pos;
                self.pos += 1;
                self.skip_balanced("(", ")")?;
                self.skip_balanced("{", "}")?;
                Ok(Expr::Opaque { calls: scan_calls(&self.toks[start..self.pos]) })
            }
            "boolean" | "byte" | "char" | "short" | "int" | "long" | "float" | "double" | "void" => {
                let ty = self.parse_type()?;
                if self.eat_op(".") && self.eat_word("class") {
                    return Ok(Expr::ClassLit(ty));
                }
                if self.at_op("::") {
                    return Ok(Expr::ClassLit(ty));
                }
                self.err("unexpected primitive type in expression")
            }
            _ => {
                let name = self.ident()?;
                if self.at_op("(") {
                    let args = self.arguments()?;
                    return Ok(Expr::Call { target: None, name, args, line });
                }
                // generic type method reference: `List<String>::new`
                if self.at_op("<") {
                    let save = self.pos;
                    if self.type_args().is_ok() && self.at_op("::") {
                        return Ok(Expr::Name(name));
                    }
                    self.pos = save;
                }
                Ok(Expr::Name(name))
            }
        }
    }

    /// After `new`.
    fn creator(&mut self) -> PResult<Expr> {
        let line = self.prev_line();
        if self.at_op("<") {
            self.skip_balanced("<", ">")?;
        }
        self.annotations()?;
        let mut name = self.ident_or_primitive()?;
        let mut args_t = Vec::new();
        loop {
            if self.at_op("<") {
                args_t = self.type_args()?;
            }
            if self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_ident()) {
                self.pos += 1;
                name.push('.');
                name.push_str(&self.ident()?);
                continue;
            }
            break;
        }
        let mut ty = TypeRef { name, args: args_t, array_dims: 0 };
        if self.at_op("[") {
            let mut dims = Vec::new();
            while self.at_op("[") {
                self.pos += 1;
                if self.eat_op("]") {
                    ty.array_dims += 1;
                    continue;
                }
                dims.push(self.expr()?);
                self.expect_op("]")?;
                ty.array_dims += 1;
            }
            let init = if self.at_op("{") {
                match self.array_init()? {
                    Expr::ArrayInit(items) => Some(items),
                    _ => None,
                }
            } else {
                None
            };
            return Ok(Expr::NewArray { ty, dims, init });
        }
        let args = self.arguments()?;
        let body = if self.at_op("{") {
            let mut anon = TypeDecl {
                name: String::new(),
                kind: TypeKind::Class,
                extends: vec![ty.clone()],
                implements: Vec::new(),
                fields: Vec::new(),
                methods: Vec::new(),
                nested: Vec::new(),
                span: LineSpan::new(line, line),
            };
            self.class_body(&mut anon)?;
            Some(anon.methods)
        } else {
            None
        };
        Ok(Expr::New { ty, args, body, line })
    }
}

fn expr_to_type(e: &Expr) -> TypeRef {
    fn name(e: &Expr) -> String {
        match e {
            Expr::Name(n) => n.clone(),
            Expr::FieldAccess { target, name: n } => format!("{}.{}", name(target), n),
            _ => String::new(),
        }
    }
    TypeRef::simple(&name(e))
}

/// Token-level call discovery used for opaque regions: `name(` and `new T(`.
pub(crate) fn scan_calls(toks: &[Token]) -> Vec<Expr> {
    let mut calls = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        if t.is_word("new") {
            // new a.b.C<...>(
            let mut j = i + 1;
            let mut last = None;
            while j < toks.len() {
                if toks[j].is_ident() {
                    last = Some(j);
                    j += 1;
                    if j < toks.len() && toks[j].is_op(".") {
                        j += 1;
                        continue;
                    }
                }
                break;
            }
            if j < toks.len() && toks[j].is_op("<") {
                let mut depth = 0usize;
                while j < toks.len() {
                    if toks[j].is_op("<") {
                        depth += 1;
                    } else if toks[j].is_op(">") {
                        depth -= 1;
                        if depth == 0 {
                            j += 1;
                            break;
                        }
                    }
                    j += 1;
                }
            }
            if let Some(l) = last {
                if j < toks.len() && toks[j].is_op("(") {
                    calls.push(Expr::New {
                        ty: TypeRef::simple(&toks[l].text),
                        args: Vec::new(),
                        body: None,
                        line: t.line,
                    });
                    i = j + 1;
                    continue;
                }
            }
            i += 1;
            continue;
        }
        if t.is_ident() && !is_reserved(&t.text) && toks.get(i + 1).is_some_and(|n| n.is_op("(")) {
            calls.push(Expr::Call { target: None, name: t.text.clone(), args: Vec::new(), line: t.line });
        }
        i += 1;
    }
    calls
}
