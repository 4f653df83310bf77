//! Single-node rewrites. Each function rewrites only the node it is given and
//! never looks at, or rewrites, nodes produced by another rule.

use crate::lang::{
    BinOp, ClassTable, Expr, ExprKind, Helper, LValue, Location, MethodDecl, PosTag, Stmt, StmtKind, Type, UnOp,
    NULL_GHOST,
};

use super::{bound_names, Rule};

fn helper_call(helper: Helper, arg: Expr, var: &str, tag_loc: &Location) -> Expr {
    let loc = arg.loc.clone();
    let ty = arg.ty.clone();
    Expr { kind: ExprKind::Helper { helper, arg: Box::new(arg), tag: PosTag::new(var, tag_loc.clone()) }, loc, ty }
}

fn bool_expr(kind: ExprKind, loc: &Location) -> Expr {
    Expr::typed(kind, loc.clone(), Type::Bool)
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr, loc: &Location) -> Expr {
    bool_expr(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc)
}

fn not(e: Expr, loc: &Location) -> Expr {
    bool_expr(ExprKind::Unary { op: UnOp::Not, operand: Box::new(e) }, loc)
}

fn is_ghost(e: Expr, loc: &Location) -> Expr {
    bool_expr(ExprKind::InstanceOf { expr: Box::new(e), class: NULL_GHOST.to_string() }, loc)
}

fn null_at(loc: &Location) -> Expr {
    Expr::typed(ExprKind::Null, loc.clone(), Type::Null)
}

/// `Class.f`, naming the class that declares field `f` of `recv`'s type.
pub(crate) fn field_var(table: &ClassTable, recv: &Expr, field: &str) -> String {
    let class = recv.static_type().class_name().unwrap_or("?");
    match table.lookup_field(class, field) {
        Some((decl, _)) => format!("{}.{field}", decl.name),
        None => format!("{class}.{field}"),
    }
}

/// Short name for what an expression denotes, used in position tags.
pub fn describe_target(table: &ClassTable, e: &Expr) -> String {
    let e = e.unwrap_helpers();
    match &e.kind {
        ExprKind::Var(name) => name.clone(),
        ExprKind::Field { recv, name } => field_var(table, recv, name),
        ExprKind::Call { recv, method, .. } => {
            let class = match recv {
                Some(r) => r.static_type().class_name().unwrap_or("?").to_string(),
                None => "this".to_string(),
            };
            format!("{class}.{method}()")
        }
        ExprKind::Extern { name, .. } => format!("lib.{name}()"),
        ExprKind::New { class, .. } => format!("new {class}()"),
        ExprKind::This => "this".to_string(),
        ExprKind::Null => "null".to_string(),
        _ => "expression".to_string(),
    }
}

pub(crate) fn null_assign_default(ty: &Type, var: &str, loc: &Location) -> Expr {
    let mut e = helper_call(Helper::NullAssign, null_at(loc), var, loc);
    e.ty = Some(ty.clone());
    e
}

pub(crate) fn wrap_assign(value: Expr, var: &str, loc: &Location) -> (Expr, bool) {
    if value.is_provably_non_null() {
        (value, false)
    } else {
        (helper_call(Helper::NullAssign, value, var, loc), true)
    }
}

pub(crate) fn wrap_return(value: Expr, ret: &Type, var: &str, loc: &Location) -> (Expr, bool) {
    if ret.is_reference() && !value.is_provably_non_null() {
        (helper_call(Helper::NullReturn, value, var, loc), true)
    } else {
        (value, false)
    }
}

pub(crate) fn wrap_deref(table: &ClassTable, recv: Expr, loc: &Location) -> (Expr, bool) {
    if recv.unwrap_helpers().is_provably_non_null() {
        return (recv, false);
    }
    let var = describe_target(table, &recv);
    (helper_call(Helper::NullDeref, recv, &var, loc), true)
}

/// `o = e` or `T o = e` of reference type: `o = nullAssign(e, ..)`.
pub fn rewrite_assign(stmt: Stmt, table: &ClassTable) -> (Stmt, bool) {
    let loc = stmt.loc.clone();
    match stmt.kind {
        StmtKind::Assign { target, value } if value.static_type().is_reference() => {
            let var = match &target {
                LValue::Var(name) => name.clone(),
                LValue::Field { recv, name } => field_var(table, recv, name),
            };
            let (value, applied) = wrap_assign(value, &var, &loc);
            (Stmt { kind: StmtKind::Assign { target, value }, loc }, applied)
        }
        StmtKind::Decl { ty, name, init: Some(init), is_final } if ty.is_reference() => {
            let (init, applied) = wrap_assign(init, &name, &loc);
            (Stmt { kind: StmtKind::Decl { ty, name, init: Some(init), is_final }, loc }, applied)
        }
        kind => (Stmt { kind, loc }, false),
    }
}

/// `T o;` of reference type: `T o = nullAssign(null, ..);`
pub fn rewrite_decl_default(stmt: Stmt) -> (Stmt, bool) {
    let loc = stmt.loc.clone();
    match stmt.kind {
        StmtKind::Decl { ty, name, init: None, is_final } if ty.is_reference() => {
            let init = null_assign_default(&ty, &name, &loc);
            (Stmt { kind: StmtKind::Decl { ty, name, init: Some(init), is_final }, loc }, true)
        }
        kind => (Stmt { kind, loc }, false),
    }
}

/// `return e;` in a method returning a reference: `return nullReturn(e, ..);`
pub fn rewrite_return(stmt: Stmt, ret: &Type, method: &str) -> (Stmt, bool) {
    let loc = stmt.loc.clone();
    match stmt.kind {
        StmtKind::Return(Some(e)) => {
            let (e, applied) = wrap_return(e, ret, method, &loc);
            (Stmt { kind: StmtKind::Return(Some(e)), loc }, applied)
        }
        kind => (Stmt { kind, loc }, false),
    }
}

/// `e.f`: `nullDeref(e).f`, unless `e` cannot be null.
pub fn rewrite_field_access(e: Expr, table: &ClassTable) -> (Expr, bool) {
    match e.kind {
        ExprKind::Field { recv, name } => {
            let (recv, applied) = wrap_deref(table, *recv, &e.loc);
            (Expr { kind: ExprKind::Field { recv: Box::new(recv), name }, loc: e.loc, ty: e.ty }, applied)
        }
        kind => (Expr { kind, ..e }, false),
    }
}

/// Wraps reference arguments of an internal call or `new` in `nullParam`.
/// Returns the number of wrapped arguments.
pub fn rewrite_call_args(e: Expr, table: &ClassTable, current_class: &str) -> (Expr, usize) {
    let params = match &e.kind {
        ExprKind::New { class, .. } => table.constructor_params(class),
        ExprKind::Call { recv, method, .. } => {
            let class = match recv {
                Some(r) => r.static_type().class_name().unwrap_or_default().to_string(),
                None => current_class.to_string(),
            };
            table.lookup_method(&class, method).map(|(_, m)| m.params.clone()).unwrap_or_default()
        }
        _ => return (e, 0),
    };
    let Expr { kind, loc, ty } = e;
    let mut count = 0;
    let mut wrap = |args: Vec<Expr>| -> Vec<Expr> {
        args.into_iter()
            .enumerate()
            .map(|(i, arg)| match params.get(i) {
                Some(p) if p.ty.is_reference() && !arg.is_provably_non_null() => {
                    count += 1;
                    helper_call(Helper::NullParam, arg, &p.name, &loc)
                }
                _ => arg,
            })
            .collect()
    };
    let kind = match kind {
        ExprKind::New { class, args } => ExprKind::New { class, args: wrap(args) },
        ExprKind::Call { recv, method, args } => ExprKind::Call { recv, method, args: wrap(args) },
        other => other,
    };
    (Expr { kind, loc, ty }, count)
}

/// `lib.m(e1, ..)`: `lib.m(exorcise(e1), ..)`. Returns the number of wrapped arguments.
pub fn rewrite_extern_call(e: Expr, table: &ClassTable) -> (Expr, usize) {
    match e.kind {
        ExprKind::Extern { name, args } => {
            let params = table.extern_decl(&name).map(|d| d.params.clone()).unwrap_or_default();
            let n = args.len();
            let args = args
                .into_iter()
                .enumerate()
                .map(|(i, arg)| {
                    let var = params.get(i).map(|p| p.name.clone()).unwrap_or_else(|| format!("arg{i}"));
                    helper_call(Helper::Exorcise, arg, &var, &e.loc)
                })
                .collect();
            (Expr { kind: ExprKind::Extern { name, args }, loc: e.loc, ty: e.ty }, n)
        }
        kind => (Expr { kind, ..e }, 0),
    }
}

/// Boxed-to-primitive coercion: routed through `nullUnbox`.
pub fn rewrite_unbox(e: Expr, table: &ClassTable) -> Expr {
    match e.kind {
        ExprKind::Unbox(inner) => {
            let var = describe_target(table, &inner);
            let mut out = helper_call(Helper::NullUnbox, *inner, &var, &e.loc);
            out.ty = Some(Type::Int);
            out
        }
        kind => Expr { kind, ..e },
    }
}

/// Classifies a reference comparison: against the null literal, or between two references.
pub(crate) fn comparison_rule(e: &Expr) -> Option<Rule> {
    match &e.kind {
        ExprKind::Binary { op: BinOp::Eq | BinOp::Ne, lhs, rhs }
            if lhs.static_type().is_reference() && rhs.static_type().is_reference() =>
        {
            if lhs.is_null_literal() || rhs.is_null_literal() {
                Some(Rule::EqNull)
            } else {
                Some(Rule::EqRef)
            }
        }
        _ => None,
    }
}

fn split_comparison(e: Expr) -> (BinOp, Expr, Expr, Location) {
    match e.kind {
        ExprKind::Binary { op, lhs, rhs } => (op, *lhs, *rhs, e.loc),
        _ => unreachable!("comparison expected"),
    }
}

/// `e1 == null` becomes `e1 == null || e1 instanceof NullGhost`, where the
/// ghost test reads the untransformed (pure) operand. `!=` is negated.
pub(crate) fn build_eq_null(e: Expr, raw: (Expr, Expr)) -> Expr {
    let (op, lhs, rhs, loc) = split_comparison(e);
    let subject = if raw.1.is_null_literal() { raw.0 } else { raw.1 };
    let cmp = binary(BinOp::Eq, lhs, rhs, &loc);
    let or = binary(BinOp::Or, cmp, is_ghost(subject, &loc), &loc);
    if op == BinOp::Ne {
        not(or, &loc)
    } else {
        or
    }
}

pub fn rewrite_eq_null(e: Expr) -> Expr {
    let raw = match &e.kind {
        ExprKind::Binary { lhs, rhs, .. } => (lhs.as_ref().clone(), rhs.as_ref().clone()),
        _ => return e,
    };
    build_eq_null(e, raw)
}

/// `a == b` becomes `a == b || ((a == null || a instanceof NullGhost) && (b == null || b instanceof NullGhost))`.
pub(crate) fn build_eq_ref(e: Expr, raw: (Expr, Expr)) -> Expr {
    let (op, lhs, rhs, loc) = split_comparison(e);
    let nullish = |x: Expr| {
        let cmp = binary(BinOp::Eq, x.clone(), null_at(&loc), &loc);
        binary(BinOp::Or, cmp, is_ghost(x, &loc), &loc)
    };
    let both = binary(BinOp::And, nullish(raw.0), nullish(raw.1), &loc);
    let or = binary(BinOp::Or, binary(BinOp::Eq, lhs, rhs, &loc), both, &loc);
    if op == BinOp::Ne {
        not(or, &loc)
    } else {
        or
    }
}

pub fn rewrite_eq_ref(e: Expr) -> Expr {
    let raw = match &e.kind {
        ExprKind::Binary { lhs, rhs, .. } => (lhs.as_ref().clone(), rhs.as_ref().clone()),
        _ => return e,
    };
    build_eq_ref(e, raw)
}

/// `e instanceof C` becomes `e instanceof C && !(e instanceof NullGhost)`.
pub(crate) fn build_instanceof(e: Expr, raw: Expr) -> Expr {
    let loc = e.loc.clone();
    binary(BinOp::And, e, not(is_ghost(raw, &loc), &loc), &loc)
}

pub fn rewrite_instanceof(e: Expr) -> Expr {
    match &e.kind {
        ExprKind::InstanceOf { expr, class } if class != NULL_GHOST => {
            let raw = expr.as_ref().clone();
            build_instanceof(e, raw)
        }
        _ => e,
    }
}

fn fresh_name(base: &str, taken: &std::collections::HashSet<String>) -> String {
    let mut candidate = format!("{base}_dup");
    let mut n = 1;
    while taken.contains(&candidate) {
        candidate = format!("{base}_dup{n}");
        n += 1;
    }
    candidate
}

/// Prefixes the body with `p = nullPassed(p, ..)` per reference parameter.
/// A `final` parameter `b` is renamed to a fresh `b_dup` and rebound by
/// `final T b = nullPassed(b_dup, ..)`, leaving the body untouched.
pub fn rewrite_method_entry(mut method: MethodDecl) -> (MethodDecl, usize) {
    let mut taken = bound_names(&method);
    let loc = method.loc.clone();
    let mut prologue = Vec::new();
    for param in &mut method.params {
        if !param.ty.is_reference() {
            continue;
        }
        let original = param.name.clone();
        let read_name = if param.is_final {
            let fresh = fresh_name(&original, &taken);
            taken.insert(fresh.clone());
            param.name = fresh.clone();
            fresh
        } else {
            original.clone()
        };
        let read = Expr::typed(ExprKind::Var(read_name), loc.clone(), param.ty.clone());
        let value = helper_call(Helper::NullPassed, read, &original, &loc);
        let kind = if param.is_final {
            StmtKind::Decl { ty: param.ty.clone(), name: original, init: Some(value), is_final: true }
        } else {
            StmtKind::Assign { target: LValue::Var(original), value }
        };
        prologue.push(Stmt { kind, loc: loc.clone() });
    }
    let n = prologue.len();
    prologue.append(&mut method.body);
    method.body = prologue;
    (method, n)
}
