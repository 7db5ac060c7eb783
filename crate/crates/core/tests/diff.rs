mod common;

use apiwatch::diff::{changed_methods, misuse_introducing_commit, CommitRef, DiffError};
use apiwatch::java::parse_compilation_unit;
use common::{build_mini_repo, commit, init_repo, write, MINI_MISUSE_FILE};

const FOO_V1: &str = "package p;\n\nclass Foo {\n    int foo() {\n        int a = 1;\n        return a;\n    }\n\n    int bar() {\n        return 2;\n    }\n}\n";

const FOO_V2: &str = "package p;\n\nclass Foo {\n    int foo() {\n        int a = 1;\n        a += 3;\n        return a;\n    }\n\n    int bar() {\n        return 2;\n    }\n}\n";

fn at(dir: &std::path::Path, id: &str) -> CommitRef {
    CommitRef::new(dir, id).unwrap()
}

#[test]
fn commit_without_java_changes_is_empty() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "src/p/Foo.java", FOO_V1);
    commit(d, 1_000, "init");
    write(d, "README.txt", "notes\n");
    let c = commit(d, 2_000, "docs");
    let got = changed_methods(&at(d, &c)).unwrap();
    assert!(got.methods.is_empty());
    assert!(got.skipped.is_empty());
}

#[test]
fn added_line_marks_enclosing_method() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "src/p/Foo.java", FOO_V1);
    commit(d, 1_000, "init");
    write(d, "src/p/Foo.java", FOO_V2);
    let c = commit(d, 2_000, "edit foo");
    let got = changed_methods(&at(d, &c)).unwrap();
    assert_eq!(got.methods.len(), 1);
    let m = &got.methods[0];
    assert_eq!(m.file, "src/p/Foo.java");
    assert_eq!(m.method_name, "foo");
    assert_eq!(m.method_id, 0);
    assert_eq!((m.declaration_span.start, m.declaration_span.end), (4, 8));
    assert_eq!(m.changed_lines.len(), 1);
    assert_eq!((m.changed_lines[0].start, m.changed_lines[0].end), (6, 6));
    assert!(m.source_text.starts_with("int foo()"));
    assert!(m.source_text.contains("a += 3;"));
    assert!(m.source_text.trim_end().ends_with('}'));
}

#[test]
fn new_file_reports_every_method() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "a.txt", "x\n");
    commit(d, 1_000, "init");
    write(d, "src/p/Foo.java", FOO_V1);
    let c = commit(d, 2_000, "add Foo");
    let got = changed_methods(&at(d, &c)).unwrap();
    let names: Vec<&str> = got.methods.iter().map(|m| m.method_name.as_str()).collect();
    assert_eq!(names, ["foo", "bar"]);
}

#[test]
fn root_commit_diffs_against_empty_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "src/p/Foo.java", FOO_V1);
    let c = commit(d, 1_000, "init");
    assert_eq!(changed_methods(&at(d, &c)).unwrap().methods.len(), 2);
}

#[test]
fn pure_deletion_maps_to_surviving_method() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "src/p/Foo.java", FOO_V2);
    commit(d, 1_000, "init");
    write(d, "src/p/Foo.java", FOO_V1);
    let c = commit(d, 2_000, "drop line");
    let got = changed_methods(&at(d, &c)).unwrap();
    assert_eq!(got.methods.len(), 1);
    assert_eq!(got.methods[0].method_name, "foo");
    assert!(!got.methods[0].source_text.contains("a += 3"));
}

#[test]
fn unparsable_file_is_skipped_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "src/p/Foo.java", FOO_V1);
    commit(d, 1_000, "init");
    write(d, "src/p/Foo.java", FOO_V2);
    write(d, "src/p/Broken.java", "class Broken { void m() { \n");
    let c = commit(d, 2_000, "mixed");
    let got = changed_methods(&at(d, &c)).unwrap();
    assert_eq!(got.methods.len(), 1);
    assert_eq!(got.skipped.len(), 1);
    assert_eq!(got.skipped[0].file, "src/p/Broken.java");
}

#[test]
fn source_text_reparses_to_one_method() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = build_mini_repo(tmp.path());
    for id in [&repo.base, &repo.introducing, &repo.fixing] {
        for m in changed_methods(&at(tmp.path(), id)).unwrap().methods {
            // constructors only parse inside a class of their own name
            let owner = std::path::Path::new(&m.file).file_stem().unwrap().to_str().unwrap();
            let wrapped = format!("class {owner} {{ {} }}", m.source_text);
            let unit = parse_compilation_unit(&wrapped).unwrap();
            let methods = unit.methods();
            assert_eq!(methods.len(), 1, "{}", m.source_text);
            assert_eq!(methods[0].name, m.method_name);
        }
    }
}

#[test]
fn changed_methods_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = build_mini_repo(tmp.path());
    let c = at(tmp.path(), &repo.introducing);
    assert_eq!(changed_methods(&c).unwrap(), changed_methods(&c).unwrap());
}

#[test]
fn mic_of_mini_fix_is_introducing_commit() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = build_mini_repo(tmp.path());
    let fixing = at(tmp.path(), &repo.fixing);
    let mic = misuse_introducing_commit(&fixing, None).unwrap();
    assert_eq!(mic.commit_id, repo.introducing);
    let files = [MINI_MISUSE_FILE.to_string()];
    assert_eq!(misuse_introducing_commit(&fixing, Some(&files)).unwrap().commit_id, repo.introducing);
}

#[test]
fn mic_prefers_later_blamed_commit() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "A.java", "class A {\n    void a() {\n        one();\n        two();\n    }\n}\n");
    commit(d, 1_000, "init");
    write(d, "A.java", "class A {\n    void a() {\n        one();\n        three();\n    }\n}\n");
    let later = commit(d, 2_000, "change two");
    write(d, "A.java", "class A {\n    void a() {\n        uno();\n        tres();\n    }\n}\n");
    let fix = commit(d, 3_000, "fix both");
    assert_eq!(misuse_introducing_commit(&at(d, &fix), None).unwrap().commit_id, later);
}

#[test]
fn mic_of_pure_addition_or_root_has_no_blame() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    init_repo(d);
    write(d, "A.java", "class A {}\n");
    let root = commit(d, 1_000, "init");
    assert!(matches!(misuse_introducing_commit(&at(d, &root), None), Err(DiffError::NoBlamedLines)));
    write(d, "B.java", "class B {}\n");
    let add = commit(d, 2_000, "add");
    assert!(matches!(misuse_introducing_commit(&at(d, &add), None), Err(DiffError::NoBlamedLines)));
}

#[test]
fn unknown_commit_is_repository_error() {
    let tmp = tempfile::tempdir().unwrap();
    init_repo(tmp.path());
    let r = changed_methods(&at(tmp.path(), "deadbeef"));
    assert!(matches!(r, Err(DiffError::RepositoryAccess { .. })));
}
