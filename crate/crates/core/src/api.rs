//! API change analysis: which third-party types a method uses, and the keyword
//! set describing the context of that usage.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::java::{walk_exprs, walk_stmts, CompilationUnit, Expr, ImportDecl, MethodDecl, Stmt, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImportClass {
    Internal,
    ThirdParty,
    JavaLang,
}

/// Number of leading package qualifiers compared against an import.
const PROJECT_PREFIX_SEGMENTS: usize = 3;

pub fn classify_import(imp: &ImportDecl, package_name: &str) -> ImportClass {
    if imp.qualified_name.starts_with("java.lang.") {
        return ImportClass::JavaLang;
    }
    if package_name.is_empty() {
        return ImportClass::Internal;
    }
    if shares_project_prefix(&imp.qualified_name, package_name) {
        ImportClass::Internal
    } else {
        ImportClass::ThirdParty
    }
}

/// Segment-wise test whether `name` starts with the first (up to three)
/// qualifiers of `package_name`. `com.foo` never matches `com.foobar`.
pub fn shares_project_prefix(name: &str, package_name: &str) -> bool {
    let prefix: Vec<&str> = package_name.split('.').take(PROJECT_PREFIX_SEGMENTS).collect();
    let segments: Vec<&str> = name.split('.').collect();
    segments.len() >= prefix.len() && segments.iter().zip(&prefix).all(|(a, b)| a == b)
}

/// The explicitly imported third-party type names a method uses.
pub fn relevant_types(method: &MethodDecl, unit: &CompilationUnit) -> BTreeSet<String> {
    let third_party: BTreeSet<&str> = unit
        .imports
        .iter()
        .filter(|imp| !imp.is_static && classify_import(imp, &unit.package_name) == ImportClass::ThirdParty)
        .filter_map(ImportDecl::simple_name)
        .collect();
    if third_party.is_empty() {
        return BTreeSet::new();
    }
    mentioned_type_names(method, unit)
        .into_iter()
        .filter(|n| third_party.contains(n.as_str()))
        .collect()
}

/// Type names a method mentions in its signature and body, plus the inherited
/// types of its class when it is marked `@Override`.
fn mentioned_type_names(method: &MethodDecl, unit: &CompilationUnit) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    let mut add = |t: &TypeRef| {
        for n in t.mentioned_names() {
            names.insert(n.to_string());
        }
    };
    method.parameter_types().for_each(&mut add);
    add(&method.return_type);
    method.thrown_types.iter().for_each(&mut add);
    if method.has_annotation("Override") {
        if let Some(owner) = unit.owner_of(method) {
            owner.extends.iter().chain(&owner.implements).for_each(&mut add);
        }
    }
    if let Some(body) = &method.body {
        walk_stmts(body, &mut |s| match s {
            Stmt::LocalVar { ty, .. } | Stmt::ForEach { ty, .. } => add(ty),
            Stmt::Try { catches, .. } => catches.iter().flat_map(|c| &c.types).for_each(&mut add),
            _ => {}
        });
        walk_exprs(body, &mut |e| match e {
            Expr::New { ty, .. } | Expr::NewArray { ty, .. } | Expr::Cast { ty, .. } | Expr::InstanceOf { ty, .. } | Expr::ClassLit(ty) => add(ty),
            // `AClass.staticCall()`, `AClass.FIELD`, `AClass::method`
            Expr::Call { target: Some(t), .. } | Expr::FieldAccess { target: t, .. } | Expr::MethodRef { target: t, .. } => {
                if let Expr::Name(n) = t.as_ref() {
                    add(&TypeRef::simple(n));
                }
            }
            _ => {}
        });
    }
    names
}

/// Import set and keyword set describing one changed method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiContext {
    pub method: String,
    pub api_imports: BTreeSet<ImportDecl>,
    pub keywords: BTreeSet<String>,
    /// Externally supplied (e.g. from a misuse manifest); restricted to `api_imports`.
    pub misused_imports: Option<BTreeSet<ImportDecl>>,
}

impl ApiContext {
    /// Keeps only those supplied qualified names that are part of `api_imports`.
    pub fn with_misused_imports<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        let wanted: BTreeSet<&str> = names.into_iter().collect();
        let found: BTreeSet<ImportDecl> = self
            .api_imports
            .iter()
            .filter(|i| wanted.contains(i.qualified_name.as_str()))
            .cloned()
            .collect();
        self.misused_imports = Some(found);
        self
    }

    pub fn import_names(&self) -> Vec<String> {
        self.api_imports.iter().map(|i| i.qualified_name.clone()).collect()
    }

    pub fn misused_import_names(&self) -> Vec<String> {
        self.misused_imports
            .iter()
            .flatten()
            .map(|i| i.qualified_name.clone())
            .collect()
    }
}

pub fn extract_context(method: &MethodDecl, unit: &CompilationUnit) -> ApiContext {
    let types = relevant_types(method, unit);
    let api_imports: BTreeSet<ImportDecl> = unit
        .imports
        .iter()
        .filter(|i| !i.is_static && i.simple_name().is_some_and(|n| types.contains(n)))
        .cloned()
        .collect();
    let mut keywords = types;
    for call in crate::java::method_calls(method) {
        // constructor calls are represented by their (third-party) type name
        if call.is_constructor || call.method_name == "this" || call.method_name == "super" {
            continue;
        }
        keywords.insert(call.method_name);
    }
    if method.has_annotation("Override") {
        keywords.insert(method.name.clone());
    }
    ApiContext {
        method: method.name.clone(),
        api_imports,
        keywords,
        misused_imports: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_compilation_unit;

    fn imp(q: &str) -> ImportDecl {
        ImportDecl::new(q, false)
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify_import(&imp("my.own.pkg.QClass"), "my.own.pkg"), ImportClass::Internal);
        assert_eq!(classify_import(&imp("a.b.BClass"), "my.own.pkg"), ImportClass::ThirdParty);
        assert_eq!(classify_import(&imp("java.lang.Thread"), "my.own.pkg"), ImportClass::JavaLang);
        assert_eq!(classify_import(&imp("java.lang.Thread"), ""), ImportClass::JavaLang);
        // only the first three qualifiers identify the project
        assert_eq!(classify_import(&imp("my.own.pkg.sub.X"), "my.own.pkg.other"), ImportClass::Internal);
        // short packages compare only what they have
        assert_eq!(classify_import(&imp("acme.util.X"), "acme"), ImportClass::Internal);
        // segment-wise, not string prefix
        assert_eq!(classify_import(&imp("com.foobar.x.Y"), "com.foo"), ImportClass::ThirdParty);
        assert_eq!(classify_import(&imp("a.b.C"), ""), ImportClass::Internal);
    }

    #[test]
    fn static_imports_use_owner_qualifier() {
        let mut i = imp("org.junit.Assert.assertEquals");
        i.is_static = true;
        assert_eq!(classify_import(&i, "my.own.pkg"), ImportClass::ThirdParty);
        let mut j = imp("my.own.pkg.Util.helper");
        j.is_static = true;
        assert_eq!(classify_import(&j, "my.own.pkg"), ImportClass::Internal);
    }

    #[test]
    fn java_lang_only_method_has_no_relevant_types() {
        let unit = parse_compilation_unit(
            "package p.q.r; import java.lang.String; class C { String m(String s) { return s.trim(); } }",
        )
        .unwrap();
        assert!(relevant_types(unit.methods()[0], &unit).is_empty());
    }

    #[test]
    fn override_pulls_in_inherited_type_and_own_name() {
        let src = "package my.app.ui; import third.party.Base; import third.party.Other;\n\
                   class View extends Base { @Override public void onDraw() { paint(); } void plain() {} }";
        let unit = parse_compilation_unit(src).unwrap();
        let on_draw = unit.methods()[0];
        let types = relevant_types(on_draw, &unit);
        assert_eq!(types, BTreeSet::from(["Base".to_string()]));
        let ctx = extract_context(on_draw, &unit);
        assert!(ctx.keywords.contains("onDraw"));
        assert!(ctx.keywords.contains("paint"));
        assert!(relevant_types(unit.methods()[1], &unit).is_empty());
    }

    #[test]
    fn empty_method_has_empty_context() {
        let unit = parse_compilation_unit("package a.b.c; import x.y.Z; class C { void m() {} }").unwrap();
        let ctx = extract_context(unit.methods()[0], &unit);
        assert!(ctx.api_imports.is_empty());
        assert!(ctx.keywords.is_empty());
    }

    #[test]
    fn internal_calls_are_keywords() {
        let unit = parse_compilation_unit("package a.b.c; class C { void m() { helper(); } void helper() {} }").unwrap();
        let ctx = extract_context(unit.methods()[0], &unit);
        assert!(ctx.keywords.contains("helper"));
    }

    #[test]
    fn misused_imports_are_restricted_to_api_imports() {
        let unit = parse_compilation_unit("package a.b.c; import x.y.Z; class C { void m(Z z) {} }").unwrap();
        let ctx = extract_context(unit.methods()[0], &unit).with_misused_imports(["x.y.Z", "not.Imported"]);
        assert_eq!(ctx.misused_import_names(), ["x.y.Z"]);
    }

    #[test]
    fn static_type_references_count_as_mentions() {
        let unit = parse_compilation_unit(
            "package a.b.c; import x.y.Util; import x.y.Consts; class C { void m() { Util.run(Consts.MAX); } }",
        )
        .unwrap();
        let types = relevant_types(unit.methods()[0], &unit);
        assert_eq!(types, BTreeSet::from(["Consts".to_string(), "Util".to_string()]));
    }
}
