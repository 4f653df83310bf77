//! Source-to-source instrumentation: injects null-detection helpers so every
//! null becomes a ghost that records how it travelled.

mod rules;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::lang::{
    resolve, ClassDecl, ClassTable, Expr, ExprKind, FieldDecl, Helper, LValue, Location, MethodDecl, Program,
    ResolveError, Stmt, StmtKind, Type,
};

pub use rules::{
    describe_target, rewrite_assign, rewrite_call_args, rewrite_decl_default, rewrite_eq_null, rewrite_eq_ref,
    rewrite_extern_call, rewrite_field_access, rewrite_instanceof, rewrite_method_entry, rewrite_return, rewrite_unbox,
};

/// One rewrite rule of the instrumentation pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    EqNull,
    InstanceOf,
    ExternCall,
    Unbox,
    FieldAccess,
    Assign,
    DeclDefault,
    CallArgs,
    MethodEntry,
    Return,
    EqRef,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::EqNull,
        Rule::InstanceOf,
        Rule::ExternCall,
        Rule::Unbox,
        Rule::FieldAccess,
        Rule::Assign,
        Rule::DeclDefault,
        Rule::CallArgs,
        Rule::MethodEntry,
        Rule::Return,
        Rule::EqRef,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::EqNull => "eq_null",
            Rule::InstanceOf => "instanceof",
            Rule::ExternCall => "extern_call",
            Rule::Unbox => "unbox",
            Rule::FieldAccess => "field_access",
            Rule::Assign => "assign",
            Rule::DeclDefault => "decl_default",
            Rule::CallArgs => "call_args",
            Rule::MethodEntry => "method_entry",
            Rule::Return => "return",
            Rule::EqRef => "eq_ref",
        }
    }

    /// Helper the rule injects; comparison rules inject a ghost test instead.
    pub fn helper(self) -> Option<Helper> {
        match self {
            Rule::ExternCall => Some(Helper::Exorcise),
            Rule::Unbox => Some(Helper::NullUnbox),
            Rule::FieldAccess => Some(Helper::NullDeref),
            Rule::Assign | Rule::DeclDefault => Some(Helper::NullAssign),
            Rule::CallArgs => Some(Helper::NullParam),
            Rule::MethodEntry => Some(Helper::NullPassed),
            Rule::Return => Some(Helper::NullReturn),
            Rule::EqNull | Rule::InstanceOf | Rule::EqRef => None,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which rules fired, and where.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransformReport {
    pub applications: Vec<(Rule, Location)>,
}

impl TransformReport {
    pub fn record(&mut self, rule: Rule, loc: &Location) {
        self.applications.push((rule, loc.clone()));
    }

    pub fn count(&self, rule: Rule) -> usize {
        self.applications.iter().filter(|(r, _)| *r == rule).count()
    }

    pub fn counts(&self) -> BTreeMap<Rule, usize> {
        let mut counts = BTreeMap::new();
        for (rule, _) in &self.applications {
            *counts.entry(*rule).or_insert(0) += 1;
        }
        counts
    }

    pub fn helper_count(&self, helper: Helper) -> usize {
        self.applications.iter().filter(|(r, _)| r.helper() == Some(helper)).count()
    }

    pub fn total(&self) -> usize {
        self.applications.len()
    }

    /// Table of `rule helper count`, then one `helper count N` line per helper.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for rule in Rule::ALL {
            let n = self.count(rule);
            let helper = rule.helper().map(Helper::name).unwrap_or("-");
            out.push_str(&format!("{:<14}{:<12}{n}\n", rule.name(), helper));
        }
        for helper in Helper::ALL {
            out.push_str(&format!("{} count {}\n", helper.name(), self.helper_count(helper)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("program is already instrumented")]
    AlreadyTransformed,
    #[error("instrumented program does not resolve: {0}")]
    IllFormed(#[from] ResolveError),
}

/// Applies every rule in one bottom-up pass and marks the result instrumented.
///
/// `p` must be resolved. The output is resolved again before it is returned.
pub fn transform_program(p: &Program) -> Result<(Program, TransformReport), TransformError> {
    if p.instrumented {
        return Err(TransformError::AlreadyTransformed);
    }
    let table = ClassTable::new(p);
    let mut pass =
        Pass { table: &table, report: TransformReport::default(), class: String::new(), method: String::new() };
    let mut out = p.clone();
    out.instrumented = true;
    for class in &mut out.classes {
        pass.class = class.name.clone();
        pass.class_decl(class);
    }
    let resolved = resolve(out)?;
    Ok((resolved, pass.report))
}

struct Pass<'a> {
    table: &'a ClassTable,
    report: TransformReport,
    class: String,
    /// `Class.method` of the method being rewritten.
    method: String,
}

impl<'a> Pass<'a> {
    fn class_decl(&mut self, class: &mut ClassDecl) {
        let class_name = class.name.clone();
        for field in &mut class.fields {
            self.field(&class_name, field);
        }
        for method in class.constructor.iter_mut().chain(class.methods.iter_mut()) {
            self.method(method);
        }
    }

    fn field(&mut self, class: &str, field: &mut FieldDecl) {
        let init = field.init.take().map(|e| self.expr(e));
        let var = format!("{class}.{}", field.name);
        field.init = if field.ty.is_reference() {
            match init {
                None => {
                    self.report.record(Rule::DeclDefault, &field.loc);
                    Some(rules::null_assign_default(&field.ty, &var, &field.loc))
                }
                Some(e) => Some(self.assign_value(e, &var, &field.loc)),
            }
        } else {
            init
        };
    }

    fn assign_value(&mut self, value: Expr, var: &str, loc: &Location) -> Expr {
        let (value, applied) = rules::wrap_assign(value, var, loc);
        if applied {
            self.report.record(Rule::Assign, loc);
        }
        value
    }

    fn method(&mut self, method: &mut MethodDecl) {
        self.method = format!("{}.{}", self.class, method.name);
        let body = std::mem::take(&mut method.body);
        method.body = self.block(body, &method.ret);
        let (rewritten, applied) = rewrite_method_entry(method.clone());
        for _ in 0..applied {
            self.report.record(Rule::MethodEntry, &method.loc);
        }
        *method = rewritten;
    }

    fn block(&mut self, stmts: Vec<Stmt>, ret: &Type) -> Vec<Stmt> {
        stmts.into_iter().map(|s| self.stmt(s, ret)).collect()
    }

    fn stmt(&mut self, stmt: Stmt, ret: &Type) -> Stmt {
        let loc = stmt.loc.clone();
        let kind = match stmt.kind {
            StmtKind::Decl { ty, name, init, is_final } => {
                let init = init.map(|e| self.expr(e));
                let init = if ty.is_reference() {
                    match init {
                        None => {
                            self.report.record(Rule::DeclDefault, &loc);
                            Some(rules::null_assign_default(&ty, &name, &loc))
                        }
                        Some(e) => Some(self.assign_value(e, &name, &loc)),
                    }
                } else {
                    init
                };
                StmtKind::Decl { ty, name, init, is_final }
            }
            StmtKind::Assign { target, value } => {
                let value = self.expr(value);
                let (target, var) = match target {
                    LValue::Var(name) => (LValue::Var(name.clone()), name),
                    LValue::Field { recv, name } => {
                        let var = rules::field_var(self.table, &recv, &name);
                        let recv = self.expr(*recv);
                        let recv = self.deref_receiver(recv, &loc);
                        (LValue::Field { recv: Box::new(recv), name }, var)
                    }
                };
                let value =
                    if value.static_type().is_reference() { self.assign_value(value, &var, &loc) } else { value };
                StmtKind::Assign { target, value }
            }
            StmtKind::Expr(e) => StmtKind::Expr(self.expr(e)),
            StmtKind::Return(Some(e)) => {
                let e = self.expr(e);
                let (e, applied) = rules::wrap_return(e, ret, &self.method.clone(), &loc);
                if applied {
                    self.report.record(Rule::Return, &loc);
                }
                StmtKind::Return(Some(e))
            }
            StmtKind::Return(None) => StmtKind::Return(None),
            StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                cond: self.expr(cond),
                then_branch: self.block(then_branch, ret),
                else_branch: else_branch.map(|b| self.block(b, ret)),
            },
            StmtKind::While { cond, body } => StmtKind::While { cond: self.expr(cond), body: self.block(body, ret) },
            StmtKind::Try { body, var, handler } => {
                StmtKind::Try { body: self.block(body, ret), var, handler: self.block(handler, ret) }
            }
            StmtKind::Throw(e) => StmtKind::Throw(self.expr(e)),
            StmtKind::Print(e) => StmtKind::Print(self.expr(e)),
        };
        Stmt { kind, loc }
    }

    fn deref_receiver(&mut self, recv: Expr, loc: &Location) -> Expr {
        let (recv, applied) = rules::wrap_deref(self.table, recv, loc);
        if applied {
            self.report.record(Rule::FieldAccess, loc);
        }
        recv
    }

    fn expr(&mut self, e: Expr) -> Expr {
        let Expr { kind, loc, ty } = e;
        match kind {
            ExprKind::Null | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::This | ExprKind::Var(_) => {
                Expr { kind, loc, ty }
            }
            ExprKind::New { class, args } => {
                let args: Vec<Expr> = args.into_iter().map(|a| self.expr(a)).collect();
                let e = Expr { kind: ExprKind::New { class, args }, loc, ty };
                let (e, n) = rewrite_call_args(e, self.table, &self.class);
                self.record_n(Rule::CallArgs, &e.loc, n);
                e
            }
            ExprKind::Call { recv, method, args } => {
                let recv = recv.map(|r| Box::new(self.expr(*r)));
                let args: Vec<Expr> = args.into_iter().map(|a| self.expr(a)).collect();
                let e = Expr { kind: ExprKind::Call { recv, method, args }, loc, ty };
                let (e, n) = rewrite_call_args(e, self.table, &self.class);
                self.record_n(Rule::CallArgs, &e.loc, n);
                e
            }
            ExprKind::Extern { name, args } => {
                let args: Vec<Expr> = args.into_iter().map(|a| self.expr(a)).collect();
                let e = Expr { kind: ExprKind::Extern { name, args }, loc, ty };
                let (e, n) = rewrite_extern_call(e, self.table);
                self.record_n(Rule::ExternCall, &e.loc, n);
                e
            }
            ExprKind::Field { recv, name } => {
                let recv = self.expr(*recv);
                let recv = self.deref_receiver(recv, &loc);
                Expr { kind: ExprKind::Field { recv: Box::new(recv), name }, loc, ty }
            }
            ExprKind::Unary { op, operand } => {
                Expr { kind: ExprKind::Unary { op, operand: Box::new(self.expr(*operand)) }, loc, ty }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let raw = (lhs.as_ref().clone(), rhs.as_ref().clone());
                let lhs = self.expr(*lhs);
                let rhs = self.expr(*rhs);
                let e = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc, ty };
                match rules::comparison_rule(&e) {
                    Some(Rule::EqNull) => {
                        self.report.record(Rule::EqNull, &e.loc);
                        rules::build_eq_null(e, raw)
                    }
                    Some(Rule::EqRef) => {
                        self.report.record(Rule::EqRef, &e.loc);
                        rules::build_eq_ref(e, raw)
                    }
                    _ => e,
                }
            }
            ExprKind::InstanceOf { expr, class } => {
                let raw = expr.as_ref().clone();
                let operand = self.expr(*expr);
                let e = Expr { kind: ExprKind::InstanceOf { expr: Box::new(operand), class }, loc, ty };
                self.report.record(Rule::InstanceOf, &e.loc);
                rules::build_instanceof(e, raw)
            }
            ExprKind::Unbox(inner) => {
                let inner = self.expr(*inner);
                let e = Expr { kind: ExprKind::Unbox(Box::new(inner)), loc, ty };
                self.report.record(Rule::Unbox, &e.loc);
                rewrite_unbox(e, self.table)
            }
            ExprKind::Helper { .. } => Expr { kind, loc, ty },
        }
    }

    fn record_n(&mut self, rule: Rule, loc: &Location, n: usize) {
        for _ in 0..n {
            self.report.record(rule, loc);
        }
    }
}

/// Every identifier bound in a method: parameters, locals and catch variables.
pub(crate) fn bound_names(method: &MethodDecl) -> HashSet<String> {
    fn walk(stmts: &[Stmt], out: &mut HashSet<String>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Decl { name, .. } => {
                    out.insert(name.clone());
                }
                StmtKind::If { then_branch, else_branch, .. } => {
                    walk(then_branch, out);
                    if let Some(b) = else_branch {
                        walk(b, out);
                    }
                }
                StmtKind::While { body, .. } => walk(body, out),
                StmtKind::Try { body, var, handler } => {
                    out.insert(var.clone());
                    walk(body, out);
                    walk(handler, out);
                }
                _ => {}
            }
        }
    }
    let mut out: HashSet<String> = method.params.iter().map(|p| p.name.clone()).collect();
    walk(&method.body, &mut out);
    out
}

#[cfg(test)]
mod tests;
