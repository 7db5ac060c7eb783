use serde::{Deserialize, Serialize};

/// Inclusive, 1-based line range inside one source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

impl LineSpan {
    pub fn new(start: u32, end: u32) -> Self {
        Self { start, end: end.max(start) }
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }

    pub fn overlaps(&self, start: u32, end: u32) -> bool {
        self.start <= end && start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompilationUnit {
    pub package_name: String,
    pub imports: Vec<ImportDecl>,
    pub types: Vec<TypeDecl>,
}

impl CompilationUnit {
    /// All methods and constructors, including those of nested and local types,
    /// in source order of their declarations.
    pub fn methods(&self) -> Vec<&MethodDecl> {
        fn walk<'a>(ty: &'a TypeDecl, out: &mut Vec<&'a MethodDecl>) {
            for m in &ty.methods {
                out.push(m);
            }
            for n in &ty.nested {
                walk(n, out);
            }
        }
        let mut out = Vec::new();
        for ty in &self.types {
            walk(ty, &mut out);
        }
        out.sort_by_key(|m| (m.span.start, m.span.end));
        out
    }

    /// The innermost type declaring `method`.
    pub fn owner_of(&self, method: &MethodDecl) -> Option<&TypeDecl> {
        fn walk<'a>(ty: &'a TypeDecl, method: &MethodDecl) -> Option<&'a TypeDecl> {
            for n in &ty.nested {
                if let Some(found) = walk(n, method) {
                    return Some(found);
                }
            }
            ty.methods.iter().any(|m| std::ptr::eq(m, method) || m == method).then_some(ty)
        }
        self.types.iter().find_map(|t| walk(t, method))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ImportDecl {
    pub qualified_name: String,
    pub is_wildcard: bool,
    pub is_static: bool,
}

impl ImportDecl {
    pub fn new(qualified_name: impl Into<String>, is_wildcard: bool) -> Self {
        Self { qualified_name: qualified_name.into(), is_wildcard, is_static: false }
    }

    /// Last segment for single-type imports; `None` for `pkg.*`.
    pub fn simple_name(&self) -> Option<&str> {
        if self.is_wildcard {
            None
        } else {
            self.qualified_name.rsplit('.').next()
        }
    }

    /// Qualifier of the imported type, or the imported package for wildcards.
    /// Static imports use the owning type's qualifier.
    pub fn type_qualifier(&self) -> &str {
        let name = if self.is_static && !self.is_wildcard {
            self.qualified_name.rsplit_once('.').map_or("", |(q, _)| q)
        } else {
            self.qualified_name.as_str()
        };
        name
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub kind: TypeKind,
    pub extends: Vec<TypeRef>,
    pub implements: Vec<TypeRef>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub nested: Vec<TypeDecl>,
    pub span: LineSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: TypeRef,
}

/// A type as written in source, generic arguments kept separately.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TypeRef {
    /// Dotted name as written, without type arguments or array brackets.
    pub name: String,
    pub args: Vec<TypeRef>,
    pub array_dims: u32,
}

impl TypeRef {
    pub fn simple(name: &str) -> Self {
        Self { name: name.to_string(), args: Vec::new(), array_dims: 0 }
    }

    pub fn simple_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or(&self.name)
    }

    pub fn is_void(&self) -> bool {
        self.name == "void" && self.array_dims == 0
    }

    /// Every type name mentioned, including generic arguments.
    pub fn mentioned_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        if !self.name.is_empty() && self.name != "?" {
            out.push(self.simple_name());
            if let Some(first) = self.name.split('.').next() {
                if first != self.simple_name() {
                    // `Outer.Inner` mentions `Outer` as well
                    out.push(first);
                }
            }
        }
        for a in &self.args {
            a.collect_names(out);
        }
    }

    /// Label used for usage-graph data nodes: erased simple name plus array brackets.
    pub fn label(&self) -> String {
        let mut s = self.simple_name().to_string();
        for _ in 0..self.array_dims {
            s.push_str("[]");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub annotations: Vec<String>,
    pub params: Vec<Param>,
    /// `void` for constructors.
    pub return_type: TypeRef,
    pub thrown_types: Vec<TypeRef>,
    pub body: Option<Vec<Stmt>>,
    pub span: LineSpan,
    /// Byte range of the full declaration in the source text.
    pub source_range: (usize, usize),
    pub is_constructor: bool,
    /// Identifier and literal tokens of the whole declaration, string contents excluded.
    pub tokens: Vec<String>,
}

impl MethodDecl {
    pub fn parameter_types(&self) -> impl Iterator<Item = &TypeRef> {
        self.params.iter().map(|p| &p.ty)
    }

    pub fn has_annotation(&self, name: &str) -> bool {
        self.annotations.iter().any(|a| a == name || a.rsplit('.').next() == Some(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatchClause {
    pub types: Vec<TypeRef>,
    pub name: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Block(Vec<Stmt>),
    LocalVar { ty: TypeRef, vars: Vec<(String, Option<Expr>)>, line: u32 },
    LocalType(Box<TypeDecl>),
    Expr(Expr),
    If { cond: Expr, then: Box<Stmt>, otherwise: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, cond: Expr },
    For { init: Vec<Stmt>, cond: Option<Expr>, update: Vec<Expr>, body: Box<Stmt> },
    ForEach { ty: TypeRef, name: String, iterable: Expr, body: Box<Stmt> },
    Try {
        resources: Vec<Stmt>,
        body: Vec<Stmt>,
        catches: Vec<CatchClause>,
        finally: Option<Vec<Stmt>>,
    },
    Switch { selector: Expr, cases: Vec<Vec<Stmt>> },
    Synchronized { lock: Expr, body: Vec<Stmt> },
    Throw(Expr),
    Return(Option<Expr>, u32),
    Break,
    Continue,
    Labeled(String, Box<Stmt>),
    Empty,
    /// Unsupported construct; only the calls found inside are kept.
    Opaque { calls: Vec<Expr>, line: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralKind {
    Number,
    Str,
    Char,
    Bool,
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaBody {
    Expr(Box<Expr>),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Name(String),
    Literal(LiteralKind, String),
    This,
    Super,
    ClassLit(TypeRef),
    FieldAccess { target: Box<Expr>, name: String },
    Call { target: Option<Box<Expr>>, name: String, args: Vec<Expr>, line: u32 },
    New { ty: TypeRef, args: Vec<Expr>, body: Option<Vec<MethodDecl>>, line: u32 },
    NewArray { ty: TypeRef, dims: Vec<Expr>, init: Option<Vec<Expr>> },
    ArrayInit(Vec<Expr>),
    Assign { target: Box<Expr>, op: String, value: Box<Expr> },
    Binary { op: String, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: String, operand: Box<Expr>, postfix: bool },
    Conditional { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
    Cast { ty: TypeRef, expr: Box<Expr> },
    InstanceOf { expr: Box<Expr>, ty: TypeRef },
    Index { target: Box<Expr>, index: Box<Expr> },
    Lambda { params: Vec<String>, body: LambdaBody },
    MethodRef { target: Box<Expr>, name: String },
    Opaque { calls: Vec<Expr> },
}

/// A call site as surfaced to analyses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallExpr {
    pub method_name: String,
    /// Source-like rendering of the receiver expression, when present.
    pub receiver: Option<String>,
    pub argument_count: usize,
    pub is_constructor: bool,
    pub line: u32,
}
