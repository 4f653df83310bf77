use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::time::Instant;

use crate::harness::{EventKind, EventLog, HELPER_CLASS};
use crate::lang::{
    BinOp, ClassDecl, ClassTable, Expr, ExprKind, Helper, LValue, Location, MethodDecl, PosTag, Program, Stmt,
    StmtKind, StubKind, Type, UnOp, INT_BOX, NPE_CLASS, OBJECT,
};
use crate::trace::{CausalLink, CausalityTrace, Frame, LinkKind, NPEReport, VariableKind};

use super::value::{BoxObj, Ghost, Obj, Value};
use super::{Mode, Outcome, RunConfig, RunResult};

struct FrameState {
    /// `Class.method`
    method: String,
    line: u32,
    this: Value,
    vars: HashMap<String, (Value, VariableKind)>,
    /// Set when an extern stub called back into this method.
    via_extern: Option<String>,
}

struct NpeSignal {
    report: NPEReport,
    /// The exception object, when the program threw one itself.
    exception: Option<Rc<Obj>>,
}

enum Ctrl {
    Npe(Box<NpeSignal>),
    Fatal(String),
}

type Eval<T> = Result<T, Ctrl>;

enum Flow {
    Next,
    Return(Value),
}

pub(super) struct Interp<'p> {
    program: &'p Program,
    table: ClassTable,
    mode: Mode,
    config: RunConfig,
    frames: Vec<FrameState>,
    events: EventLog,
    output: Vec<String>,
    next_id: u64,
    link_seq: u64,
    steps: u64,
    ghosts: Vec<Rc<Ghost>>,
    reports: Vec<NPEReport>,
    ghost_leaks: usize,
}

fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Int => Value::Int(0),
        Type::Bool => Value::Bool(false),
        _ => Value::Null,
    }
}

fn render_args(args: &[Value]) -> String {
    let parts: Vec<String> = args.iter().map(Value::to_string).collect();
    format!("({})", parts.join(", "))
}

fn haunted_class(ty: Option<&Type>) -> String {
    match ty {
        Some(Type::Ref(c)) => c.clone(),
        _ => OBJECT.to_string(),
    }
}

impl<'p> Interp<'p> {
    pub(super) fn new(program: &'p Program, mode: Mode, config: RunConfig) -> Self {
        Interp {
            program,
            table: ClassTable::new(program),
            mode,
            config,
            frames: Vec::new(),
            events: EventLog::new(program.file.to_string(), mode),
            output: Vec::new(),
            next_id: 0,
            link_seq: 0,
            steps: 0,
            ghosts: Vec::new(),
            reports: Vec::new(),
            ghost_leaks: 0,
        }
    }

    pub(super) fn run(mut self) -> RunResult {
        let start = Instant::now();
        let (class, _) = self.program.entry().expect("entry checked by caller");
        let result = self
            .instantiate(&class.name, Vec::new(), &class.loc, true)
            .and_then(|this| self.invoke(this, "main", Vec::new(), None));
        let outcome = match result {
            Ok((_, true)) => Outcome::Normal("void".to_string()),
            Ok((v, false)) => Outcome::Normal(v.to_string()),
            Err(Ctrl::Npe(signal)) => Outcome::Npe(signal.report),
            Err(Ctrl::Fatal(message)) => Outcome::OtherError(message),
        };
        RunResult {
            outcome,
            events: self.events,
            output: self.output,
            wall_time: start.elapsed(),
            ghost_leaks: self.ghost_leaks,
            ghost_traces: self.ghosts.iter().map(|g| g.trace()).collect(),
            npe_reports: self.reports,
        }
    }

    // ---- frames, links and failures ----

    fn frame(&mut self) -> &mut FrameState {
        self.frames.last_mut().expect("no active frame")
    }

    fn stack(&self) -> Vec<Frame> {
        let file = self.program.file.to_string();
        self.frames.iter().rev().map(|f| Frame { method: f.method.clone(), file: file.clone(), line: f.line }).collect()
    }

    fn step(&mut self) -> Eval<()> {
        self.steps += 1;
        if self.steps > self.config.max_steps {
            return Err(Ctrl::Fatal(format!("step limit of {} exceeded", self.config.max_steps)));
        }
        Ok(())
    }

    fn link(&mut self, kind: LinkKind, loc: &Location) -> CausalLink {
        self.link_seq += 1;
        let mut link = CausalLink::new(kind, loc.clone());
        link.stack = self.stack();
        link.seq = self.link_seq;
        link
    }

    fn new_ghost(&mut self, haunted: String) -> Rc<Ghost> {
        let ghost = Rc::new(Ghost::new(haunted));
        self.ghosts.push(ghost.clone());
        ghost
    }

    fn raise(&mut self, trace: CausalityTrace) -> Ctrl {
        let report = NPEReport::from_trace(trace, self.stack());
        self.reports.push(report.clone());
        Ctrl::Npe(Box::new(NpeSignal { report, exception: None }))
    }

    /// The variable an expression names, if any.
    fn variable_of(&self, e: &Expr) -> Option<(String, VariableKind)> {
        match &e.unwrap_helpers().kind {
            ExprKind::Var(name) => {
                let kind = self.frames.last().and_then(|f| f.vars.get(name)).map(|(_, k)| *k);
                Some((name.clone(), kind.unwrap_or(VariableKind::Local)))
            }
            ExprKind::Field { name, .. } => Some((name.clone(), VariableKind::Field)),
            _ => None,
        }
    }

    /// `Recv.m(T)` for calls, `T name` for variables and fields, `null` for the literal.
    fn signature_of(&self, e: &Expr) -> String {
        let e = e.unwrap_helpers();
        match &e.kind {
            ExprKind::Null => "null".to_string(),
            ExprKind::This => "this".to_string(),
            ExprKind::Var(name) => format!("{} {name}", e.static_type()),
            ExprKind::Field { recv, name } => {
                let class = recv.static_type().class_name().unwrap_or("?");
                let owner = self.table.lookup_field(class, name).map(|(c, _)| c.name.as_str()).unwrap_or(class);
                format!("{} {owner}.{name}", e.static_type())
            }
            ExprKind::Call { recv, method, .. } => {
                let class = match recv {
                    Some(r) => r.static_type().class_name().unwrap_or("?").to_string(),
                    None => self.current_class(),
                };
                self.table.method_signature(&class, method)
            }
            ExprKind::Extern { name, .. } => match self.table.extern_decl(name) {
                Some(d) => d.signature(),
                None => format!("lib.{name}(?)"),
            },
            ExprKind::New { class, .. } => format!("{class}.<init>"),
            _ => format!("{}", e.static_type()),
        }
    }

    fn current_class(&self) -> String {
        match self.frames.last().map(|f| &f.this) {
            Some(Value::Object(o)) => o.class.clone(),
            _ => "?".to_string(),
        }
    }

    fn decorate(&self, mut link: CausalLink, e: &Expr) -> CausalLink {
        if let Some((name, kind)) = self.variable_of(e) {
            link = link.with_variable(name, kind);
        }
        link.with_signature(self.signature_of(e))
    }

    /// Link recording where a real null came from, when the expression shows it.
    fn origin(&mut self, e: &Expr, loc: &Location) -> Option<CausalLink> {
        let e = e.unwrap_helpers();
        match &e.kind {
            ExprKind::Null => Some(self.link(LinkKind::Literal, loc).with_signature("null")),
            ExprKind::Extern { .. } => {
                let sig = self.signature_of(e);
                Some(self.link(LinkKind::Return, loc).with_signature(sig))
            }
            _ => None,
        }
    }

    /// Dereference or unboxing of a null that carries no ghost.
    fn null_failure(&mut self, kind: LinkKind, e: &Expr, loc: &Location) -> Ctrl {
        if self.mode == Mode::Original {
            let report = NPEReport::plain(loc.clone(), self.stack());
            self.reports.push(report.clone());
            return Ctrl::Npe(Box::new(NpeSignal { report, exception: None }));
        }
        let mut trace = CausalityTrace::new();
        if let Some(origin) = self.origin(e, loc) {
            trace.append_link(origin);
        }
        let link = self.link(kind, loc);
        trace.append_link(self.decorate(link, e));
        self.raise(trace)
    }

    /// Dereference of a ghost: the ghost records it, then the NPE carries its trace.
    fn ghost_failure(
        &mut self,
        ghost: &Rc<Ghost>,
        kind: LinkKind,
        e: &Expr,
        loc: &Location,
        sig: Option<String>,
    ) -> Ctrl {
        let link = self.link(kind, loc);
        let mut link = self.decorate(link, e);
        if let Some(sig) = sig {
            link.expr_signature = Some(sig);
        }
        ghost.append(link);
        self.raise(ghost.trace())
    }

    // ---- objects and calls ----

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn new_object(&mut self, class: &str) -> Rc<Obj> {
        let id = self.fresh_id();
        let mut fields = HashMap::new();
        for name in self.table.ancestry(class) {
            if let Some(decl) = self.program.class(&name) {
                for f in &decl.fields {
                    fields.insert(f.name.clone(), default_value(&f.ty));
                }
            }
        }
        Rc::new(Obj { class: class.to_string(), id, fields: RefCell::new(fields), report: RefCell::new(None) })
    }

    fn find_method(&self, class: &str, name: &str) -> Option<(&'p ClassDecl, &'p MethodDecl)> {
        let program = self.program;
        self.table.ancestry(class).iter().filter_map(|c| program.class(c)).find_map(|c| c.method(name).map(|m| (c, m)))
    }

    fn push_frame(&mut self, method: String, line: u32, this: Value, via_extern: Option<String>) -> Eval<()> {
        if self.frames.len() >= self.config.max_depth {
            return Err(Ctrl::Fatal(format!("call depth limit of {} exceeded", self.config.max_depth)));
        }
        self.frames.push(FrameState { method, line, this, vars: HashMap::new(), via_extern });
        Ok(())
    }

    fn bind_params(&mut self, params: &[crate::lang::Param], args: Vec<Value>) {
        let frame = self.frame();
        for (p, v) in params.iter().zip(args) {
            frame.vars.insert(p.name.clone(), (v, VariableKind::Parameter));
        }
    }

    fn instantiate(&mut self, class: &str, args: Vec<Value>, loc: &Location, silent: bool) -> Eval<Value> {
        if class == INT_BOX {
            let value = match args.first() {
                Some(Value::Int(v)) => Some(*v),
                _ => None,
            };
            let id = self.fresh_id();
            return Ok(Value::IntBox(Rc::new(BoxObj { id, value })));
        }
        let obj = self.new_object(class);
        if self.program.class(class).is_some() {
            self.construct(&obj, class, args, loc, silent)?;
        }
        Ok(Value::Object(obj))
    }

    fn construct(&mut self, obj: &Rc<Obj>, class: &str, args: Vec<Value>, loc: &Location, silent: bool) -> Eval<()> {
        let program = self.program;
        let decl = program.class(class).expect("user class");
        let event_name = format!("{class}#<init>");
        if !silent {
            self.events.push(EventKind::Call, event_name.clone(), render_args(&args));
        }
        self.step()?;
        let line = decl.constructor.as_ref().map(|c| c.loc.line).unwrap_or(decl.loc.line);
        let _ = loc;
        self.push_frame(format!("{class}.<init>"), line, Value::Object(obj.clone()), None)?;
        if let Some(ctor) = &decl.constructor {
            self.bind_params(&ctor.params, args);
        }
        let result = self.construct_body(obj, decl, silent);
        self.frames.pop();
        if !silent {
            let payload = if result.is_ok() { "void".to_string() } else { "throws NullPointerException".to_string() };
            self.events.push(EventKind::Return, event_name, payload);
        }
        result
    }

    fn construct_body(&mut self, obj: &Rc<Obj>, decl: &'p ClassDecl, silent: bool) -> Eval<()> {
        if let Some(sup) = &decl.superclass {
            if self.program.class(sup).is_some() {
                let loc = decl.loc.clone();
                self.construct(obj, sup, Vec::new(), &loc, silent)?;
            }
        }
        for field in &decl.fields {
            self.frame().line = field.loc.line;
            let value = match &field.init {
                Some(init) => self.eval(init)?,
                None => default_value(&field.ty),
            };
            obj.fields.borrow_mut().insert(field.name.clone(), value);
        }
        if let Some(ctor) = &decl.constructor {
            self.exec_block(&ctor.body)?;
        }
        Ok(())
    }

    /// Calls `name` on an object, dispatching on its runtime class. The flag is
    /// true for void methods.
    fn invoke(&mut self, recv: Value, name: &str, args: Vec<Value>, via_extern: Option<String>) -> Eval<(Value, bool)> {
        let class = match &recv {
            Value::Object(o) => o.class.clone(),
            other => return Err(Ctrl::Fatal(format!("cannot call `{name}` on {other}"))),
        };
        let (owner, method) = match self.find_method(&class, name) {
            Some(found) => found,
            None => return Err(Ctrl::Fatal(format!("class `{class}` has no method `{name}`"))),
        };
        let event_name = format!("{}#{}", owner.name, method.name);
        self.events.push(EventKind::Call, event_name.clone(), render_args(&args));
        self.step()?;
        self.push_frame(format!("{}.{}", owner.name, method.name), method.loc.line, recv, via_extern)?;
        self.bind_params(&method.params, args);
        let result = self.exec_block(&method.body);
        self.frames.pop();
        let is_void = method.ret == Type::Void;
        match result {
            Ok(flow) => {
                let value = match flow {
                    Flow::Return(v) => v,
                    Flow::Next => Value::Null,
                };
                let payload = if is_void { "void".to_string() } else { value.to_string() };
                self.events.push(EventKind::Return, event_name, payload);
                Ok((value, is_void))
            }
            Err(e) => {
                self.events.push(EventKind::Return, event_name, "throws NullPointerException");
                Err(e)
            }
        }
    }

    // ---- statements ----

    fn exec_block(&mut self, stmts: &'p [Stmt]) -> Eval<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.exec(s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn exec(&mut self, stmt: &'p Stmt) -> Eval<Flow> {
        self.step()?;
        self.frame().line = stmt.loc.line;
        match &stmt.kind {
            StmtKind::Decl { ty, name, init, .. } => {
                let (value, kind) = match init {
                    Some(e) => {
                        let kind = match &e.kind {
                            ExprKind::Helper { helper: Helper::NullPassed, .. } => VariableKind::Parameter,
                            _ => VariableKind::Local,
                        };
                        (self.eval(e)?, kind)
                    }
                    None => (default_value(ty), VariableKind::Local),
                };
                self.frame().vars.insert(name.clone(), (value, kind));
            }
            StmtKind::Assign { target, value } => match target {
                LValue::Var(name) => {
                    let v = self.eval(value)?;
                    let frame = self.frame();
                    let kind = frame.vars.get(name).map(|(_, k)| *k).unwrap_or(VariableKind::Local);
                    frame.vars.insert(name.clone(), (v, kind));
                }
                LValue::Field { recv, name } => {
                    let target = self.eval(recv)?;
                    let obj = self.object_for_field(target, recv, &stmt.loc)?;
                    let v = self.eval(value)?;
                    obj.fields.borrow_mut().insert(name.clone(), v);
                }
            },
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                if self.eval_bool(cond)? {
                    return self.exec_block(then_branch);
                } else if let Some(b) = else_branch {
                    return self.exec_block(b);
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval_bool(cond)? {
                    if let Flow::Return(v) = self.exec_block(body)? {
                        return Ok(Flow::Return(v));
                    }
                    self.frame().line = stmt.loc.line;
                }
            }
            StmtKind::Try { body, var, handler } => {
                let depth = self.frames.len();
                match self.exec_block(body) {
                    Err(Ctrl::Npe(signal)) => {
                        self.frames.truncate(depth);
                        let exception = match signal.exception {
                            Some(obj) => obj,
                            None => {
                                let obj = self.new_object(NPE_CLASS);
                                *obj.report.borrow_mut() = Some(signal.report);
                                obj
                            }
                        };
                        self.frame().vars.insert(var.clone(), (Value::Object(exception), VariableKind::Local));
                        return self.exec_block(handler);
                    }
                    other => return other,
                }
            }
            StmtKind::Throw(e) => {
                let v = self.eval(e)?;
                return Err(match v {
                    Value::Object(obj) => {
                        let existing = obj.report.borrow().clone();
                        let report = match existing {
                            Some(r) => r,
                            None => NPEReport::plain(stmt.loc.clone(), self.stack()),
                        };
                        self.reports.push(report.clone());
                        Ctrl::Npe(Box::new(NpeSignal { report, exception: Some(obj) }))
                    }
                    Value::Ghost(g) => self.ghost_failure(&g, LinkKind::Deref, e, &stmt.loc, None),
                    _ => self.null_failure(LinkKind::Deref, e, &stmt.loc),
                });
            }
            StmtKind::Print(e) => {
                let v = self.eval(e)?;
                self.output.push(v.to_string());
            }
        }
        Ok(Flow::Next)
    }

    fn object_for_field(&mut self, target: Value, recv: &Expr, loc: &Location) -> Eval<Rc<Obj>> {
        match target {
            Value::Object(o) => Ok(o),
            Value::Ghost(g) => Err(self.ghost_failure(&g, LinkKind::Deref, recv, loc, None)),
            Value::Null => Err(self.null_failure(LinkKind::Deref, recv, loc)),
            other => Err(Ctrl::Fatal(format!("field access on {other}"))),
        }
    }

    // ---- expressions ----

    fn eval_bool(&mut self, e: &'p Expr) -> Eval<bool> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            other => Err(Ctrl::Fatal(format!("expected a boolean, found {other}"))),
        }
    }

    fn eval_int(&mut self, e: &'p Expr) -> Eval<i64> {
        match self.eval(e)? {
            Value::Int(v) => Ok(v),
            other => Err(Ctrl::Fatal(format!("expected an integer, found {other}"))),
        }
    }

    fn eval_args(&mut self, args: &'p [Expr]) -> Eval<Vec<Value>> {
        args.iter().map(|a| self.eval(a)).collect()
    }

    fn eval(&mut self, e: &'p Expr) -> Eval<Value> {
        match &e.kind {
            ExprKind::Null => Ok(Value::Null),
            ExprKind::Int(v) => Ok(Value::Int(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::This => Ok(self.frame().this.clone()),
            ExprKind::Var(name) => match self.frame().vars.get(name) {
                Some((v, _)) => Ok(v.clone()),
                None => Err(Ctrl::Fatal(format!("unbound variable `{name}`"))),
            },
            ExprKind::Field { recv, name } => {
                let target = self.eval(recv)?;
                let obj = self.object_for_field(target, recv, &e.loc)?;
                let value = obj.fields.borrow().get(name).cloned();
                value.ok_or_else(|| Ctrl::Fatal(format!("object has no field `{name}`")))
            }
            ExprKind::New { class, args } => {
                let args = self.eval_args(args)?;
                self.frame().line = e.loc.line;
                self.instantiate(class, args, &e.loc, false)
            }
            ExprKind::Call { recv, method, args } => {
                let target = match recv {
                    Some(r) => self.eval(r)?,
                    None => self.frame().this.clone(),
                };
                let args = self.eval_args(args)?;
                self.frame().line = e.loc.line;
                match target {
                    Value::Object(_) => Ok(self.invoke(target, method, args, None)?.0),
                    Value::Ghost(g) => {
                        let receiver = recv.as_deref().expect("`this` is never a ghost");
                        let class = receiver.static_type().class_name().unwrap_or(&g.haunted).to_string();
                        let sig = self.table.method_signature(&class, method);
                        Err(self.ghost_failure(&g, LinkKind::Deref, receiver, &e.loc, Some(sig)))
                    }
                    Value::Null => {
                        let receiver = recv.as_deref().expect("`this` is never null");
                        Err(self.null_failure(LinkKind::Deref, receiver, &e.loc))
                    }
                    other => Err(Ctrl::Fatal(format!("cannot call `{method}` on {other}"))),
                }
            }
            ExprKind::Extern { name, args } => self.call_extern(name, args, &e.loc),
            ExprKind::Unary { op, operand } => match op {
                UnOp::Not => Ok(Value::Bool(!self.eval_bool(operand)?)),
                UnOp::Neg => Ok(Value::Int(self.eval_int(operand)?.wrapping_neg())),
            },
            ExprKind::Binary { op, lhs, rhs } => self.eval_binary(*op, lhs, rhs),
            ExprKind::InstanceOf { expr, class } => {
                let v = self.eval(expr)?;
                let table = &self.table;
                Ok(Value::Bool(v.instance_of(class, |a, b| table.is_subclass(a, b))))
            }
            ExprKind::Unbox(inner) => {
                let v = self.eval(inner)?;
                self.unbox(v, inner, &e.loc)
            }
            ExprKind::Helper { helper, arg, tag } => {
                let v = self.eval(arg)?;
                self.helper_call(*helper, arg, v, tag, e.ty.as_ref(), None)
            }
        }
    }

    fn unbox(&mut self, v: Value, inner: &Expr, loc: &Location) -> Eval<Value> {
        match v {
            Value::IntBox(b) => match b.value {
                Some(i) => Ok(Value::Int(i)),
                None => Err(self.empty_box_failure(inner, loc)),
            },
            Value::Int(i) => Ok(Value::Int(i)),
            Value::Ghost(g) => Err(self.ghost_failure(&g, LinkKind::Unbox, inner, loc, None)),
            Value::Null => Err(self.null_failure(LinkKind::Unbox, inner, loc)),
            other => Err(Ctrl::Fatal(format!("cannot unbox {other}"))),
        }
    }

    /// A box hiding a missing integer: no null was ever visible, so there is
    /// no origin to report.
    fn empty_box_failure(&mut self, inner: &Expr, loc: &Location) -> Ctrl {
        if self.mode == Mode::Original {
            let report = NPEReport::plain(loc.clone(), self.stack());
            self.reports.push(report.clone());
            return Ctrl::Npe(Box::new(NpeSignal { report, exception: None }));
        }
        let link = self.link(LinkKind::Unbox, loc);
        let link = self.decorate(link, inner);
        self.raise(CausalityTrace::from_links(vec![link]))
    }

    fn eval_binary(&mut self, op: BinOp, lhs: &'p Expr, rhs: &'p Expr) -> Eval<Value> {
        match op {
            BinOp::And => return Ok(Value::Bool(self.eval_bool(lhs)? && self.eval_bool(rhs)?)),
            BinOp::Or => return Ok(Value::Bool(self.eval_bool(lhs)? || self.eval_bool(rhs)?)),
            BinOp::Eq | BinOp::Ne => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                let same = a.same(&b);
                return Ok(Value::Bool(if op == BinOp::Eq { same } else { !same }));
            }
            _ => {}
        }
        let a = self.eval_int(lhs)?;
        let b = self.eval_int(rhs)?;
        let v = match op {
            BinOp::Add => Value::Int(a.wrapping_add(b)),
            BinOp::Sub => Value::Int(a.wrapping_sub(b)),
            BinOp::Mul => Value::Int(a.wrapping_mul(b)),
            BinOp::Div | BinOp::Rem if b == 0 => return Err(Ctrl::Fatal("division by zero".to_string())),
            BinOp::Div => Value::Int(a.wrapping_div(b)),
            BinOp::Rem => Value::Int(a.wrapping_rem(b)),
            BinOp::Lt => Value::Bool(a < b),
            BinOp::Le => Value::Bool(a <= b),
            BinOp::Gt => Value::Bool(a > b),
            BinOp::Ge => Value::Bool(a >= b),
            BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne => unreachable!(),
        };
        Ok(v)
    }

    // ---- externs ----

    fn call_extern(&mut self, name: &str, args: &'p [Expr], loc: &Location) -> Eval<Value> {
        let program = self.program;
        let decl = match program.extern_decl(name) {
            Some(d) => d,
            None => return Err(Ctrl::Fatal(format!("undeclared extern `{name}`"))),
        };
        let sig = decl.signature();
        let mut values = Vec::with_capacity(args.len());
        for arg in args {
            let v = match &arg.kind {
                ExprKind::Helper { helper: Helper::Exorcise, arg: inner, tag } => {
                    let v = self.eval(inner)?;
                    self.helper_call(Helper::Exorcise, inner, v, tag, arg.ty.as_ref(), Some(&sig))?
                }
                _ => self.eval(arg)?,
            };
            values.push(v);
        }
        self.frame().line = loc.line;
        self.ghost_leaks += values.iter().filter(|v| v.is_ghost()).count();
        let event_name = format!("lib#{name}");
        self.events.push(EventKind::Call, event_name.clone(), render_args(&values));
        self.step()?;
        let result = match decl.stub {
            StubKind::ReturnsNull => Ok(Value::Null),
            StubKind::ReturnsFresh => match &decl.ret {
                Type::Ref(class) if class == INT_BOX => {
                    let id = self.fresh_id();
                    Ok(Value::IntBox(Rc::new(BoxObj { id, value: None })))
                }
                Type::Ref(class) => self.instantiate(class, Vec::new(), loc, false),
                _ => Ok(Value::Null),
            },
            StubKind::Echo => Ok(values.first().cloned().unwrap_or(Value::Null)),
            StubKind::IsNull => Ok(Value::Bool(matches!(values.first(), Some(Value::Null)))),
            StubKind::Callback => {
                let target = decl.callback.clone().unwrap_or_default();
                match values.first().cloned() {
                    Some(recv @ Value::Object(_)) => {
                        let class = recv.runtime_class().unwrap_or(OBJECT).to_string();
                        let params =
                            self.find_method(&class, &target).map(|(_, m)| m.params.clone()).unwrap_or_default();
                        let defaults = params.iter().map(|p| default_value(&p.ty)).collect();
                        self.invoke(recv, &target, defaults, Some(sig.clone())).map(|(v, _)| v)
                    }
                    _ => Err(self.null_failure(LinkKind::Deref, &args[0], loc)),
                }
            }
        };
        let payload = match &result {
            Ok(_) if decl.ret == Type::Void => "void".to_string(),
            Ok(v) => v.to_string(),
            Err(_) => "throws NullPointerException".to_string(),
        };
        self.events.push(EventKind::Return, event_name, payload);
        if decl.ret == Type::Void {
            return result.map(|_| Value::Null);
        }
        result
    }

    // ---- instrumentation helpers ----

    fn helper_call(
        &mut self,
        helper: Helper,
        arg: &Expr,
        v: Value,
        tag: &PosTag,
        ty: Option<&Type>,
        extern_sig: Option<&str>,
    ) -> Eval<Value> {
        let event_name = format!("{HELPER_CLASS}#{}", helper.name());
        self.events.push(EventKind::Call, event_name.clone(), format!("({v})"));
        let result = self.apply_helper(helper, arg, v, tag, ty, extern_sig);
        let payload = match &result {
            Ok(v) => v.to_string(),
            Err(_) => "throws NullPointerException".to_string(),
        };
        self.events.push(EventKind::Return, event_name, payload);
        result
    }

    fn tag_link(&mut self, kind: LinkKind, tag: &PosTag, arg: &Expr) -> CausalLink {
        let link = self.link(kind, &tag.loc);
        let (name, var_kind) = match (kind, tag.var.rsplit_once('.')) {
            (LinkKind::Invoke | LinkKind::Entry, _) => (tag.var.clone(), VariableKind::Parameter),
            (_, Some((_, field))) => (field.to_string(), VariableKind::Field),
            (_, None) => {
                let known = self.frames.last().and_then(|f| f.vars.get(&tag.var)).map(|(_, k)| *k);
                (tag.var.clone(), known.unwrap_or(VariableKind::Local))
            }
        };
        let link = link.with_variable(name, var_kind);
        match kind {
            LinkKind::Return => {
                let method = self.frames.last().map(|f| f.method.clone()).unwrap_or_default();
                let class_method = method.split_once('.').map(|(c, m)| self.table.method_signature(c, m));
                link.with_signature(class_method.unwrap_or(method))
            }
            LinkKind::Entry => link,
            _ => {
                let sig = self.signature_of(arg);
                link.with_signature(sig)
            }
        }
    }

    fn apply_helper(
        &mut self,
        helper: Helper,
        arg: &Expr,
        v: Value,
        tag: &PosTag,
        ty: Option<&Type>,
        extern_sig: Option<&str>,
    ) -> Eval<Value> {
        let propagate = match helper {
            Helper::NullAssign => Some(LinkKind::Assign),
            Helper::NullParam => Some(LinkKind::Invoke),
            Helper::NullPassed => Some(LinkKind::Entry),
            Helper::NullReturn => Some(LinkKind::Return),
            _ => None,
        };
        if let Some(kind) = propagate {
            return Ok(match v {
                Value::Ghost(g) => {
                    let link = self.tag_link(kind, tag, arg);
                    g.append(link);
                    Value::Ghost(g)
                }
                Value::Null => {
                    let ghost = self.new_ghost(haunted_class(ty.or(arg.ty.as_ref())));
                    let callback = self.frames.last().and_then(|f| f.via_extern.clone());
                    match (kind, callback) {
                        (LinkKind::Entry, Some(sig)) => {
                            let mut link = self.tag_link(kind, tag, arg);
                            link.expr_signature = Some(sig);
                            ghost.append(link);
                        }
                        _ => {
                            if let Some(origin) = self.origin(arg, &tag.loc) {
                                ghost.append(origin);
                            }
                            let link = self.tag_link(kind, tag, arg);
                            ghost.append(link);
                        }
                    }
                    Value::Ghost(ghost)
                }
                other => other,
            });
        }
        match helper {
            Helper::Exorcise => match v {
                Value::Ghost(g) => {
                    let link = self.link(LinkKind::Extern, &tag.loc);
                    let sig = extern_sig.map(str::to_string).unwrap_or_else(|| format!("lib.{}(?)", tag.var));
                    g.append(link.with_variable(tag.var.clone(), VariableKind::Parameter).with_signature(sig));
                    Ok(Value::Null)
                }
                other => Ok(other),
            },
            Helper::NullUnbox => match v {
                Value::IntBox(b) => match b.value {
                    Some(i) => Ok(Value::Int(i)),
                    None => Err(self.empty_box_failure(arg, &tag.loc)),
                },
                Value::Ghost(g) => Err(self.ghost_failure(&g, LinkKind::Unbox, arg, &tag.loc, None)),
                Value::Null => Err(self.null_failure(LinkKind::Unbox, arg, &tag.loc)),
                other => Ok(other),
            },
            Helper::NullDeref => match v {
                Value::Ghost(g) => Err(self.ghost_failure(&g, LinkKind::Deref, arg, &tag.loc, None)),
                Value::Null => Err(self.null_failure(LinkKind::Deref, arg, &tag.loc)),
                other => Ok(other),
            },
            _ => unreachable!("propagating helpers handled above"),
        }
    }
}
