use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::ResolveError;

type RResult<T> = Result<T, ResolveError>;

fn fail<T>(loc: &Location, message: impl Into<String>) -> RResult<T> {
    Err(ResolveError { loc: loc.clone(), message: message.into() })
}

const BUILTIN_CLASSES: [&str; 3] = [OBJECT, INT_BOX, NPE_CLASS];

/// Read-only view of a program's class hierarchy.
#[derive(Debug, Clone)]
pub struct ClassTable {
    classes: HashMap<String, ClassDecl>,
    externs: HashMap<String, ExternDecl>,
}

impl ClassTable {
    pub fn new(program: &Program) -> Self {
        ClassTable {
            classes: program.classes.iter().map(|c| (c.name.clone(), c.clone())).collect(),
            externs: program.externs.iter().map(|e| (e.name.clone(), e.clone())).collect(),
        }
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.get(name)
    }

    pub fn extern_decl(&self, name: &str) -> Option<&ExternDecl> {
        self.externs.get(name)
    }

    pub fn is_builtin(name: &str) -> bool {
        BUILTIN_CLASSES.contains(&name)
    }

    pub fn is_known(&self, name: &str) -> bool {
        Self::is_builtin(name) || self.classes.contains_key(name)
    }

    pub fn superclass(&self, name: &str) -> Option<&str> {
        if name == OBJECT {
            return None;
        }
        match self.classes.get(name) {
            Some(c) => Some(c.superclass.as_deref().unwrap_or(OBJECT)),
            None if Self::is_builtin(name) => Some(OBJECT),
            None => None,
        }
    }

    /// `name` followed by its ancestors, ending with `Object`. Stops on cycles.
    pub fn ancestry(&self, name: &str) -> Vec<String> {
        let mut chain = vec![name.to_string()];
        let mut current = name;
        while let Some(sup) = self.superclass(current) {
            if chain.iter().any(|c| c == sup) {
                break;
            }
            chain.push(sup.to_string());
            current = sup;
        }
        chain
    }

    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        self.ancestry(sub).iter().any(|c| c == sup)
    }

    pub fn is_subtype(&self, from: &Type, to: &Type) -> bool {
        match (from, to) {
            (Type::Null, Type::Ref(_)) => true,
            (Type::Ref(a), Type::Ref(b)) => self.is_subclass(a, b),
            (a, b) => a == b,
        }
    }

    /// Finds a method by name, searching superclasses. Returns the declaring class.
    pub fn lookup_method(&self, class: &str, method: &str) -> Option<(&ClassDecl, &MethodDecl)> {
        self.ancestry(class).iter().filter_map(|c| self.classes.get(c)).find_map(|c| c.method(method).map(|m| (c, m)))
    }

    pub fn lookup_field(&self, class: &str, field: &str) -> Option<(&ClassDecl, &FieldDecl)> {
        self.ancestry(class).iter().filter_map(|c| self.classes.get(c)).find_map(|c| c.field(field).map(|f| (c, f)))
    }

    pub fn constructor(&self, class: &str) -> Option<&MethodDecl> {
        self.classes.get(class).and_then(|c| c.constructor.as_ref())
    }

    /// Parameters a `new C(..)` expression binds: the constructor's, or none.
    pub fn constructor_params(&self, class: &str) -> Vec<Param> {
        if class == INT_BOX {
            return vec![Param { name: "value".into(), ty: Type::Int, is_final: false }];
        }
        self.constructor(class).map(|c| c.params.clone()).unwrap_or_default()
    }

    /// `Class.method(T1,T2)` for a method resolved against a static receiver type.
    pub fn method_signature(&self, receiver: &str, method: &str) -> String {
        match self.lookup_method(receiver, method) {
            Some((_, m)) => {
                let params: Vec<String> = m.params.iter().map(|p| p.ty.to_string()).collect();
                format!("{receiver}.{method}({})", params.join(","))
            }
            None => format!("{receiver}.{method}(?)"),
        }
    }
}

/// Statically checks a program: binds names, checks nominal types, rejects
/// assignments to `final` variables and inserts implicit `IntBox` unboxing.
///
/// Errors are reported for the first offending construct in source order.
pub fn resolve(mut program: Program) -> RResult<Program> {
    let table = ClassTable::new(&program);
    let instrumented = program.instrumented;
    check_declarations(&program, &table)?;

    let mut checker =
        Checker { table: &table, instrumented, scopes: Vec::new(), class: String::new(), ret: Type::Void };
    for class in &mut program.classes {
        checker.class = class.name.clone();
        for field in &mut class.fields {
            if let Some(init) = &mut field.init {
                checker.scopes = vec![HashMap::new()];
                checker.coerce(init, &field.ty)?;
            }
        }
        let class_name = class.name.clone();
        for method in class.constructor.iter_mut().chain(class.methods.iter_mut()) {
            checker.method(&class_name, method)?;
        }
    }
    Ok(program)
}

fn check_type(table: &ClassTable, ty: &Type, loc: &Location, allow_void: bool) -> RResult<()> {
    match ty {
        Type::Void if !allow_void => fail(loc, "`void` is not a value type"),
        Type::Ref(name) if !table.is_known(name) => fail(loc, format!("unknown type `{name}`")),
        Type::Null => fail(loc, "`null` is not a type"),
        _ => Ok(()),
    }
}

fn check_declarations(program: &Program, table: &ClassTable) -> RResult<()> {
    let mut externs = HashSet::new();
    for ext in &program.externs {
        if !externs.insert(ext.name.as_str()) {
            return fail(&ext.loc, format!("duplicate extern `{}`", ext.name));
        }
        check_type(table, &ext.ret, &ext.loc, true)?;
        let mut names = HashSet::new();
        for p in &ext.params {
            check_type(table, &p.ty, &ext.loc, false)?;
            if !names.insert(p.name.as_str()) {
                return fail(&ext.loc, format!("duplicate parameter `{}`", p.name));
            }
        }
        check_stub(table, ext)?;
    }

    let mut classes = HashSet::new();
    for class in &program.classes {
        if ClassTable::is_builtin(&class.name) || class.name == NULL_GHOST {
            return fail(&class.loc, format!("`{}` is a built-in type", class.name));
        }
        if !classes.insert(class.name.as_str()) {
            return fail(&class.loc, format!("duplicate class `{}`", class.name));
        }
    }

    for class in &program.classes {
        if let Some(sup) = &class.superclass {
            if sup != OBJECT && table.class(sup).is_none() {
                return fail(&class.loc, format!("unknown superclass `{sup}`"));
            }
            let chain = table.ancestry(&class.name);
            if chain.last().map(String::as_str) != Some(OBJECT) {
                return fail(&class.loc, format!("inheritance cycle through `{}`", class.name));
            }
            if let Some(ctor) = table.constructor(sup) {
                if !ctor.params.is_empty() {
                    return fail(&class.loc, format!("superclass `{sup}` constructor takes arguments"));
                }
            }
        }

        let mut fields = HashSet::new();
        for field in &class.fields {
            check_type(table, &field.ty, &field.loc, false)?;
            if !fields.insert(field.name.as_str()) {
                return fail(&field.loc, format!("duplicate field `{}`", field.name));
            }
            if let Some(sup) = table.superclass(&class.name) {
                if table.lookup_field(sup, &field.name).is_some() {
                    return fail(&field.loc, format!("field `{}` hides an inherited field", field.name));
                }
            }
        }

        let mut methods = HashSet::new();
        for method in class.constructor.iter().chain(class.methods.iter()) {
            if Helper::from_name(&method.name).is_some() {
                return fail(&method.loc, format!("`{}` is reserved for instrumentation", method.name));
            }
            if !method.is_constructor() && !methods.insert(method.name.as_str()) {
                return fail(&method.loc, format!("duplicate method `{}` (overloading is not supported)", method.name));
            }
            check_type(table, &method.ret, &method.loc, true)?;
            let mut names = HashSet::new();
            for p in &method.params {
                check_type(table, &p.ty, &method.loc, false)?;
                if !names.insert(p.name.as_str()) {
                    return fail(&method.loc, format!("duplicate parameter `{}`", p.name));
                }
            }
            if method.is_constructor() {
                continue;
            }
            if let Some(sup) = table.superclass(&class.name) {
                if let Some((_, overridden)) = table.lookup_method(sup, &method.name) {
                    let same_params = overridden.params.len() == method.params.len()
                        && overridden.params.iter().zip(&method.params).all(|(a, b)| a.ty == b.ty);
                    if !same_params || overridden.ret != method.ret {
                        return fail(
                            &method.loc,
                            format!("method `{}` overrides with a different signature", method.name),
                        );
                    }
                }
            }
        }
    }

    let entries: Vec<&MethodDecl> = program
        .classes
        .iter()
        .flat_map(|c| c.methods.iter())
        .filter(|m| m.name == "main" && m.params.is_empty())
        .collect();
    match entries.len() {
        1 => match program.entry().and_then(|(c, _)| c.constructor.as_ref()) {
            Some(ctor) if !ctor.params.is_empty() => fail(&ctor.loc, "entry class constructor takes arguments"),
            _ => Ok(()),
        },
        0 => fail(&Location::new(program.file.clone(), 1), "no zero-argument `main` entry method"),
        _ => fail(&entries[1].loc, "more than one zero-argument `main` entry method"),
    }
}

fn check_stub(table: &ClassTable, ext: &ExternDecl) -> RResult<()> {
    let first = ext.params.first();
    match ext.stub {
        StubKind::ReturnsNull => {
            if !ext.ret.is_reference() && ext.ret != Type::Void {
                return fail(&ext.loc, "`null` stub needs a reference or void return type");
            }
        }
        StubKind::ReturnsFresh => match &ext.ret {
            Type::Ref(name) => {
                if table.constructor_params(name).iter().any(|_| name != INT_BOX) {
                    return fail(&ext.loc, format!("`new` stub needs a zero-argument constructor for `{name}`"));
                }
                if name == NPE_CLASS {
                    return fail(&ext.loc, "`new` stub cannot create exceptions");
                }
            }
            _ => return fail(&ext.loc, "`new` stub needs a reference return type"),
        },
        StubKind::Echo => match first {
            Some(p) if table.is_subtype(&p.ty, &ext.ret) => {}
            _ => return fail(&ext.loc, "`echo` stub needs a first parameter assignable to the return type"),
        },
        StubKind::IsNull => {
            if ext.ret != Type::Bool || !first.is_some_and(|p| p.ty.is_reference()) {
                return fail(&ext.loc, "`isnull` stub needs a reference parameter and a boolean return type");
            }
        }
        StubKind::Callback => {
            let target = ext.callback.as_deref().unwrap_or_default();
            let class = match first.map(|p| &p.ty) {
                Some(Type::Ref(c)) if table.class(c).is_some() => c,
                _ => return fail(&ext.loc, "`callback` stub needs a first parameter of a user class"),
            };
            if table.lookup_method(class, target).is_none() {
                return fail(&ext.loc, format!("class `{class}` has no method `{target}` to call back"));
            }
            if !ext.ret.is_reference() && ext.ret != Type::Void {
                return fail(&ext.loc, "`callback` stub needs a reference or void return type");
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct VarInfo {
    ty: Type,
    is_final: bool,
}

struct Checker<'a> {
    table: &'a ClassTable,
    instrumented: bool,
    scopes: Vec<HashMap<String, VarInfo>>,
    class: String,
    ret: Type,
}

fn always_exits(stmts: &[Stmt]) -> bool {
    match stmts.last().map(|s| &s.kind) {
        Some(StmtKind::Return(_)) | Some(StmtKind::Throw(_)) => true,
        Some(StmtKind::If { then_branch, else_branch: Some(else_branch), .. }) => {
            always_exits(then_branch) && always_exits(else_branch)
        }
        Some(StmtKind::Try { body, handler, .. }) => always_exits(body) && always_exits(handler),
        _ => false,
    }
}

impl<'a> Checker<'a> {
    fn method(&mut self, class: &str, method: &mut MethodDecl) -> RResult<()> {
        self.class = class.to_string();
        self.ret = method.ret.clone();
        let params = method
            .params
            .iter()
            .map(|p| (p.name.clone(), VarInfo { ty: p.ty.clone(), is_final: p.is_final }))
            .collect();
        self.scopes = vec![params];
        self.block(&mut method.body)?;
        if method.ret != Type::Void && !always_exits(&method.body) {
            return fail(&method.loc, format!("method `{}` may finish without returning a value", method.name));
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<&VarInfo> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn block(&mut self, stmts: &mut [Stmt]) -> RResult<()> {
        self.scopes.push(HashMap::new());
        let result = stmts.iter_mut().try_for_each(|s| self.stmt(s));
        self.scopes.pop();
        result
    }

    fn declare(&mut self, name: &str, info: VarInfo, loc: &Location) -> RResult<()> {
        if self.lookup(name).is_some() {
            return fail(loc, format!("variable `{name}` is already defined"));
        }
        self.scopes.last_mut().expect("scope").insert(name.to_string(), info);
        Ok(())
    }

    fn stmt(&mut self, stmt: &mut Stmt) -> RResult<()> {
        let loc = stmt.loc.clone();
        match &mut stmt.kind {
            StmtKind::Decl { ty, name, init, is_final } => {
                check_type(self.table, ty, &loc, false)?;
                if let Some(init) = init {
                    self.coerce(init, ty)?;
                }
                self.declare(name, VarInfo { ty: ty.clone(), is_final: *is_final }, &loc)?;
            }
            StmtKind::Assign { target, value } => {
                let target_ty = match target {
                    LValue::Var(name) => match self.lookup(name) {
                        None => return fail(&loc, format!("undeclared variable `{name}`")),
                        Some(info) if info.is_final => {
                            return fail(&loc, format!("cannot assign to final variable `{name}`"))
                        }
                        Some(info) => info.ty.clone(),
                    },
                    LValue::Field { recv, name } => self.field_type(recv, name, &loc)?,
                };
                self.coerce(value, &target_ty)?;
            }
            StmtKind::Expr(e) => {
                let is_statement = matches!(
                    e.kind,
                    ExprKind::Call { .. } | ExprKind::Extern { .. } | ExprKind::New { .. } | ExprKind::Helper { .. }
                );
                if !is_statement {
                    return fail(&loc, "expression is not a statement");
                }
                self.expr(e, None)?;
            }
            StmtKind::Return(value) => match (value, &self.ret.clone()) {
                (None, Type::Void) => {}
                (None, _) => return fail(&loc, "missing return value"),
                (Some(_), Type::Void) => return fail(&loc, "void method cannot return a value"),
                (Some(e), ret) => self.coerce(e, ret)?,
            },
            StmtKind::If { cond, then_branch, else_branch } => {
                self.coerce(cond, &Type::Bool)?;
                self.block(then_branch)?;
                if let Some(b) = else_branch {
                    self.block(b)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.coerce(cond, &Type::Bool)?;
                self.block(body)?;
            }
            StmtKind::Try { body, var, handler } => {
                self.block(body)?;
                self.scopes.push(HashMap::new());
                let result = self
                    .declare(var, VarInfo { ty: Type::Ref(NPE_CLASS.into()), is_final: false }, &loc)
                    .and_then(|_| handler.iter_mut().try_for_each(|s| self.stmt(s)));
                self.scopes.pop();
                result?;
            }
            StmtKind::Throw(e) => {
                let ty = self.expr(e, None)?;
                if !self.table.is_subtype(&ty, &Type::Ref(NPE_CLASS.into())) {
                    return fail(&loc, format!("can only throw `{NPE_CLASS}`, found `{ty}`"));
                }
            }
            StmtKind::Print(e) => {
                let ty = self.expr(e, None)?;
                if ty == Type::Void {
                    return fail(&loc, "cannot print a void value");
                }
            }
        }
        Ok(())
    }

    fn field_type(&mut self, recv: &mut Expr, name: &str, loc: &Location) -> RResult<Type> {
        let recv_ty = self.expr(recv, None)?;
        let class = match &recv_ty {
            Type::Ref(c) => c.clone(),
            other => return fail(loc, format!("type `{other}` has no fields")),
        };
        match self.table.lookup_field(&class, name) {
            Some((_, f)) => Ok(f.ty.clone()),
            None => fail(loc, format!("class `{class}` has no field `{name}`")),
        }
    }

    /// Checks `e` against `target`, inserting an unbox node for `IntBox` where
    /// an `int` is required.
    fn coerce(&mut self, e: &mut Expr, target: &Type) -> RResult<()> {
        let ty = self.expr(e, Some(target))?;
        if self.table.is_subtype(&ty, target) {
            return Ok(());
        }
        if *target == Type::Int && ty.is_int_box() {
            wrap_unbox(e);
            return Ok(());
        }
        fail(&e.loc, format!("expected `{target}`, found `{ty}`"))
    }

    fn require_pure(&self, e: &Expr, what: &str) -> RResult<()> {
        if self.instrumented || e.is_pure() {
            Ok(())
        } else {
            fail(&e.loc, format!("operand of {what} must be a variable, field access, `this` or literal"))
        }
    }

    fn args(&mut self, args: &mut [Expr], params: &[Param], what: &str, loc: &Location) -> RResult<()> {
        if args.len() != params.len() {
            return fail(loc, format!("{what} expects {} argument(s), got {}", params.len(), args.len()));
        }
        for (arg, param) in args.iter_mut().zip(params) {
            self.coerce(arg, &param.ty)?;
        }
        Ok(())
    }

    fn expr(&mut self, e: &mut Expr, expected: Option<&Type>) -> RResult<Type> {
        let loc = e.loc.clone();
        let ty = match &mut e.kind {
            ExprKind::Null => Type::Null,
            ExprKind::Int(_) => Type::Int,
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::This => Type::Ref(self.class.clone()),
            ExprKind::Var(name) => match self.lookup(name) {
                Some(info) => info.ty.clone(),
                None => return fail(&loc, format!("undeclared variable `{name}`")),
            },
            ExprKind::Field { recv, name } => {
                let name = name.clone();
                self.field_type(recv, &name, &loc)?
            }
            ExprKind::New { class, args } => {
                if !self.table.is_known(class) {
                    return fail(&loc, format!("unknown class `{class}`"));
                }
                let params = self.table.constructor_params(class);
                let class = class.clone();
                self.args(args, &params, &format!("constructor of `{class}`"), &loc)?;
                Type::Ref(class)
            }
            ExprKind::Call { recv, method, args } => {
                let class = match recv {
                    None => self.class.clone(),
                    Some(r) => match self.expr(r, None)? {
                        Type::Ref(c) => c,
                        other => return fail(&loc, format!("cannot call `{method}` on type `{other}`")),
                    },
                };
                let decl = match self.table.lookup_method(&class, method) {
                    Some((_, m)) => m.clone(),
                    None => return fail(&loc, format!("class `{class}` has no method `{method}`")),
                };
                self.args(args, &decl.params, &format!("method `{method}`"), &loc)?;
                decl.ret.clone()
            }
            ExprKind::Extern { name, args } => {
                let decl = match self.table.extern_decl(name) {
                    Some(d) => d.clone(),
                    None => return fail(&loc, format!("undeclared extern `{name}`")),
                };
                self.args(args, &decl.params, &format!("extern `{name}`"), &loc)?;
                decl.ret.clone()
            }
            ExprKind::Unary { op, operand } => {
                let want = if *op == UnOp::Not { Type::Bool } else { Type::Int };
                self.coerce(operand, &want)?;
                want
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                if op.is_arithmetic() || op.is_ordering() {
                    self.coerce(lhs, &Type::Int)?;
                    self.coerce(rhs, &Type::Int)?;
                    if op.is_arithmetic() {
                        Type::Int
                    } else {
                        Type::Bool
                    }
                } else if matches!(op, BinOp::And | BinOp::Or) {
                    self.coerce(lhs, &Type::Bool)?;
                    self.coerce(rhs, &Type::Bool)?;
                    Type::Bool
                } else {
                    let lt = self.expr(lhs, None)?;
                    let rt = self.expr(rhs, None)?;
                    let numeric = |t: &Type| *t == Type::Int || t.is_int_box();
                    if (lt == Type::Int && numeric(&rt)) || (rt == Type::Int && numeric(&lt)) {
                        if lt.is_int_box() {
                            wrap_unbox(lhs);
                        }
                        if rt.is_int_box() {
                            wrap_unbox(rhs);
                        }
                    } else if lt == Type::Bool && rt == Type::Bool {
                    } else if lt.is_reference() && rt.is_reference() {
                        self.require_pure(lhs, "a reference comparison")?;
                        self.require_pure(rhs, "a reference comparison")?;
                    } else {
                        return fail(&loc, format!("cannot compare `{lt}` with `{rt}`"));
                    }
                    Type::Bool
                }
            }
            ExprKind::InstanceOf { expr, class } => {
                let operand = self.expr(expr, None)?;
                if !operand.is_reference() {
                    return fail(&loc, format!("`instanceof` needs a reference operand, found `{operand}`"));
                }
                self.require_pure(expr, "`instanceof`")?;
                let known = self.table.is_known(class) || (self.instrumented && class == NULL_GHOST);
                if !known {
                    return fail(&loc, format!("unknown type `{class}` in `instanceof`"));
                }
                Type::Bool
            }
            ExprKind::Unbox(inner) => {
                let t = self.expr(inner, None)?;
                if !t.is_int_box() {
                    return fail(&loc, format!("cannot unbox `{t}`"));
                }
                Type::Int
            }
            ExprKind::Helper { helper, arg, .. } => {
                if !self.instrumented {
                    return fail(&loc, format!("`{}` is only allowed in instrumented programs", helper.name()));
                }
                match helper {
                    Helper::NullUnbox => {
                        let t = self.expr(arg, None)?;
                        if !(t.is_int_box() || t == Type::Null) {
                            return fail(&loc, format!("`nullUnbox` expects `IntBox`, found `{t}`"));
                        }
                        Type::Int
                    }
                    Helper::NullDeref => {
                        let t = self.expr(arg, None)?;
                        if !matches!(t, Type::Ref(_)) {
                            return fail(&loc, format!("`nullDeref` expects an object, found `{t}`"));
                        }
                        t
                    }
                    _ => {
                        let t = self.expr(arg, expected)?;
                        match (t, expected) {
                            (Type::Null, Some(exp)) if exp.is_reference() => exp.clone(),
                            (t, _) => t,
                        }
                    }
                }
            }
        };
        e.ty = Some(ty.clone());
        Ok(ty)
    }
}

fn wrap_unbox(e: &mut Expr) {
    let loc = e.loc.clone();
    let inner = std::mem::replace(e, Expr::new(ExprKind::Null, loc.clone()));
    *e = Expr::typed(ExprKind::Unbox(Box::new(inner)), loc, Type::Int);
}
