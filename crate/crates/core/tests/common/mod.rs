#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use ghosttrace::lang::{expr_children, load, ClassTable, Expr, ExprKind, Helper, LValue, Program, Stmt, StmtKind};
use ghosttrace::trace::{format_kinds, CausalityTrace};
use ghosttrace::transform::transform_program;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every corpus program, by file stem, in name order.
pub fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "mini"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|path| {
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            let file = path.file_name().unwrap().to_string_lossy().into_owned();
            let src = fs::read_to_string(&path).unwrap();
            let program = load(&src, &file).unwrap_or_else(|e| panic!("{file}: {e}"));
            (name, program)
        })
        .collect()
}

pub fn golden(name: &str, ext: &str) -> String {
    fs::read_to_string(corpus_dir().join(format!("{name}.{ext}"))).unwrap_or_else(|e| panic!("{name}.{ext}: {e}"))
}

pub fn instrument(p: &Program) -> Program {
    transform_program(p).expect("transform").0
}

pub fn kinds(trace: &CausalityTrace) -> String {
    format_kinds(&trace.kinds())
}

/// Expected link-kind sequences, keyed by corpus file.
pub const REFERENCE_SHAPES: [(&str, &str); 13] = [
    ("mckoi", "literal,assign,return,assign,deref"),
    ("freemarker_107", "literal,assign,deref"),
    ("jfreechart_687", "literal,entry,invoke,deref"),
    ("collections_331", "literal,assign,deref"),
    ("math_305", "literal,return,assign,return,deref"),
    ("math_1117", "literal,assign,return,assign,deref"),
    ("lang_304", "literal,assign,deref"),
    ("lang_587", "literal,assign,deref"),
    ("lang_703", "literal,assign,deref"),
    ("math_369", "literal,assign,deref"),
    ("math_988a", "literal,assign,deref"),
    ("math_1115", "literal,assign,deref"),
    ("math_988b", "literal,assign,unbox"),
];

/// The row whose null hides behind an opaque library box.
pub const SYMPTOM_ONLY_ROW: &str = "math_290";

pub fn rows() -> Vec<&'static str> {
    let mut rows: Vec<&str> = REFERENCE_SHAPES.iter().map(|(n, _)| *n).collect();
    rows.push(SYMPTOM_ONLY_ROW);
    rows
}

// ---- helper census ----

fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    for c in expr_children(e) {
        walk_expr(c, f);
    }
}

fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match &s.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                walk_stmts(then_branch, f);
                if let Some(b) = else_branch {
                    walk_stmts(b, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            StmtKind::Try { body, handler, .. } => {
                walk_stmts(body, f);
                walk_stmts(handler, f);
            }
            _ => {}
        }
    }
}

fn stmt_exprs(s: &Stmt) -> Vec<&Expr> {
    match &s.kind {
        StmtKind::Decl { init, .. } => init.iter().collect(),
        StmtKind::Assign { target, value } => {
            let mut out = Vec::new();
            if let LValue::Field { recv, .. } = target {
                out.push(recv.as_ref());
            }
            out.push(value);
            out
        }
        StmtKind::Expr(e) | StmtKind::Throw(e) | StmtKind::Print(e) => vec![e],
        StmtKind::Return(e) => e.iter().collect(),
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
        StmtKind::Try { .. } => Vec::new(),
    }
}

/// Every expression in the program, with the enclosing method's return type.
fn all_exprs(p: &Program) -> Vec<&Expr> {
    let mut out = Vec::new();
    for class in &p.classes {
        for field in &class.fields {
            if let Some(init) = &field.init {
                walk_expr(init, &mut |e| out.push(e));
            }
        }
        for m in class.constructor.iter().chain(class.methods.iter()) {
            walk_stmts(&m.body, &mut |s| {
                for e in stmt_exprs(s) {
                    walk_expr(e, &mut |x| out.push(x));
                }
            });
        }
    }
    out
}

/// Helper calls present in a program.
pub fn helper_counts(p: &Program) -> BTreeMap<Helper, usize> {
    let mut counts = BTreeMap::new();
    for e in all_exprs(p) {
        if let ExprKind::Helper { helper, .. } = &e.kind {
            *counts.entry(*helper).or_insert(0) += 1;
        }
    }
    counts
}

fn non_null(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::This | ExprKind::New { .. })
}

/// Helper calls the rewrite should add, counted from the source constructs
/// of an uninstrumented program.
pub fn census(p: &Program) -> BTreeMap<Helper, usize> {
    let table = ClassTable::new(p);
    let mut counts: BTreeMap<Helper, usize> = BTreeMap::new();
    let mut add = |h: Helper| *counts.entry(h).or_insert(0) += 1;
    for class in &p.classes {
        for field in &class.fields {
            if field.ty.is_reference() && !field.init.as_ref().is_some_and(non_null) {
                add(Helper::NullAssign);
            }
        }
        for m in class.constructor.iter().chain(class.methods.iter()) {
            for param in &m.params {
                if param.ty.is_reference() {
                    add(Helper::NullPassed);
                }
            }
            walk_stmts(&m.body, &mut |s| match &s.kind {
                StmtKind::Decl { ty, init, .. } if ty.is_reference() => {
                    if !init.as_ref().is_some_and(non_null) {
                        add(Helper::NullAssign);
                    }
                }
                StmtKind::Assign { value, .. } if value.static_type().is_reference() && !non_null(value) => {
                    add(Helper::NullAssign)
                }
                StmtKind::Return(Some(v)) if m.ret.is_reference() && !non_null(v) => add(Helper::NullReturn),
                _ => {}
            });
        }
    }
    for class in &p.classes {
        for m in class.constructor.iter().chain(class.methods.iter()) {
            walk_stmts(&m.body, &mut |s| {
                if let StmtKind::Assign { target: LValue::Field { recv, .. }, .. } = &s.kind {
                    if !non_null(recv) {
                        add(Helper::NullDeref);
                    }
                }
            });
        }
    }
    for e in all_exprs(p) {
        match &e.kind {
            ExprKind::Field { recv, .. } if !non_null(recv) => add(Helper::NullDeref),
            ExprKind::Unbox(_) => add(Helper::NullUnbox),
            ExprKind::Extern { args, .. } => {
                for _ in args {
                    add(Helper::Exorcise);
                }
            }
            ExprKind::Call { recv, method, args } => {
                let class = match recv {
                    Some(r) => r.static_type().class_name().unwrap_or_default().to_string(),
                    None => enclosing_class(p, e),
                };
                if let Some((_, decl)) = table.lookup_method(&class, method) {
                    for (param, arg) in decl.params.iter().zip(args) {
                        if param.ty.is_reference() && !non_null(arg) {
                            add(Helper::NullParam);
                        }
                    }
                }
            }
            ExprKind::New { class, args } => {
                for (param, arg) in table.constructor_params(class).iter().zip(args) {
                    if param.ty.is_reference() && !non_null(arg) {
                        add(Helper::NullParam);
                    }
                }
            }
            _ => {}
        }
    }
    counts
}

/// Class whose body contains `target`, found by address.
fn enclosing_class(p: &Program, target: &Expr) -> String {
    for class in &p.classes {
        let mut found = false;
        for m in class.constructor.iter().chain(class.methods.iter()) {
            walk_stmts(&m.body, &mut |s| {
                for e in stmt_exprs(s) {
                    walk_expr(e, &mut |x| found |= std::ptr::eq(x, target));
                }
            });
        }
        for field in &class.fields {
            if let Some(init) = &field.init {
                walk_expr(init, &mut |x| found |= std::ptr::eq(x, target));
            }
        }
        if found {
            return class.name.clone();
        }
    }
    String::new()
}
