use std::fmt;
use std::sync::Arc;

/// Source position of a construct. Injected code reuses the location of the
/// construct it wraps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub file: Arc<str>,
    pub line: u32,
}

impl Location {
    pub fn new(file: impl Into<Arc<str>>, line: u32) -> Self {
        Location { file: file.into(), line }
    }

    /// Placeholder used when comparing programs structurally.
    pub fn erased() -> Self {
        Location { file: Arc::from(""), line: 0 }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Void,
    /// Any class-like type: user classes, `Object`, `IntBox`, `NullPointerException`.
    Ref(String),
    /// Type of the `null` literal. Never written in source.
    Null,
}

pub const OBJECT: &str = "Object";
pub const INT_BOX: &str = "IntBox";
pub const NPE_CLASS: &str = "NullPointerException";
/// Marker type every null ghost satisfies. Only legal in instrumented programs.
pub const NULL_GHOST: &str = "NullGhost";

impl Type {
    pub fn is_reference(&self) -> bool {
        matches!(self, Type::Ref(_) | Type::Null)
    }

    pub fn is_int_box(&self) -> bool {
        matches!(self, Type::Ref(n) if n == INT_BOX)
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            Type::Ref(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("boolean"),
            Type::Void => f.write_str("void"),
            Type::Ref(n) => f.write_str(n),
            Type::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    /// File the program was parsed from. Instrumented programs keep the name
    /// of the original source so reported locations stay stable.
    pub file: Arc<str>,
    pub instrumented: bool,
    pub externs: Vec<ExternDecl>,
    pub classes: Vec<ClassDecl>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn extern_decl(&self, name: &str) -> Option<&ExternDecl> {
        self.externs.iter().find(|e| e.name == name)
    }

    /// The unique zero-argument `main` method, as (class, method).
    pub fn entry(&self) -> Option<(&ClassDecl, &MethodDecl)> {
        self.classes
            .iter()
            .find_map(|c| c.methods.iter().find(|m| m.name == "main" && m.params.is_empty()).map(|m| (c, m)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StubKind {
    /// Returns a real null.
    ReturnsNull,
    /// Returns a freshly constructed instance of the declared return type.
    /// For `IntBox` this is a box with no integer inside.
    ReturnsFresh,
    /// Returns its first argument.
    Echo,
    /// Returns whether its first argument is null.
    IsNull,
    /// Calls the named method on its first argument, binding null (or zero)
    /// to every parameter.
    Callback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub stub: StubKind,
    /// Target method for [`StubKind::Callback`].
    pub callback: Option<String>,
    pub loc: Location,
}

impl ExternDecl {
    pub fn signature(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|p| p.ty.to_string()).collect();
        format!("lib.{}({})", self.name, params.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub superclass: Option<String>,
    pub fields: Vec<FieldDecl>,
    pub constructor: Option<MethodDecl>,
    pub methods: Vec<MethodDecl>,
    pub loc: Location,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub is_final: bool,
}

pub const CONSTRUCTOR_NAME: &str = "<init>";

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    /// `<init>` for constructors.
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub loc: Location,
}

impl MethodDecl {
    pub fn is_constructor(&self) -> bool {
        self.name == CONSTRUCTOR_NAME
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl {
        ty: Type,
        name: String,
        init: Option<Expr>,
        is_final: bool,
    },
    Assign {
        target: LValue,
        value: Expr,
    },
    Expr(Expr),
    Return(Option<Expr>),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    /// `try { .. } catch (NullPointerException var) { .. }`
    Try {
        body: Vec<Stmt>,
        var: String,
        handler: Vec<Stmt>,
    },
    Throw(Expr),
    Print(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LValue {
    Var(String),
    Field { recv: Box<Expr>, name: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Location,
    /// Static type, filled in by the resolver.
    pub ty: Option<Type>,
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Location) -> Self {
        Expr { kind, loc, ty: None }
    }

    pub fn typed(kind: ExprKind, loc: Location, ty: Type) -> Self {
        Expr { kind, loc, ty: Some(ty) }
    }

    pub fn is_null_literal(&self) -> bool {
        matches!(self.kind, ExprKind::Null)
    }

    /// `this` and `new` expressions can never evaluate to null.
    pub fn is_provably_non_null(&self) -> bool {
        matches!(self.kind, ExprKind::This | ExprKind::New { .. })
    }

    /// Side-effect free and cheap to evaluate twice: literals, variables,
    /// `this` and field-access chains over those.
    pub fn is_pure(&self) -> bool {
        match &self.kind {
            ExprKind::Null | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::This | ExprKind::Var(_) => true,
            ExprKind::Field { recv, .. } => recv.is_pure(),
            _ => false,
        }
    }

    /// Strips helper wrappers, returning the expression the program author wrote.
    pub fn unwrap_helpers(&self) -> &Expr {
        match &self.kind {
            ExprKind::Helper { arg, .. } => arg.unwrap_helpers(),
            _ => self,
        }
    }

    pub fn static_type(&self) -> &Type {
        self.ty.as_ref().unwrap_or(&Type::Void)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
    }

    pub fn is_ordering(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

/// The seven helpers injected by instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Helper {
    NullAssign,
    NullParam,
    NullPassed,
    NullReturn,
    Exorcise,
    NullUnbox,
    NullDeref,
}

impl Helper {
    pub const ALL: [Helper; 7] = [
        Helper::NullAssign,
        Helper::NullParam,
        Helper::NullPassed,
        Helper::NullReturn,
        Helper::Exorcise,
        Helper::NullUnbox,
        Helper::NullDeref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Helper::NullAssign => "nullAssign",
            Helper::NullParam => "nullParam",
            Helper::NullPassed => "nullPassed",
            Helper::NullReturn => "nullReturn",
            Helper::Exorcise => "exorcise",
            Helper::NullUnbox => "nullUnbox",
            Helper::NullDeref => "nullDeref",
        }
    }

    pub fn from_name(name: &str) -> Option<Helper> {
        Helper::ALL.into_iter().find(|h| h.name() == name)
    }
}

/// Position tag passed to helpers, printed as `"<var>, <file>:<line>"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosTag {
    pub var: String,
    pub loc: Location,
}

impl PosTag {
    pub fn new(var: impl Into<String>, loc: Location) -> Self {
        PosTag { var: var.into(), loc }
    }

    pub fn render(&self) -> String {
        format!("{}, {}:{}", self.var, self.loc.file, self.loc.line)
    }

    pub fn parse(text: &str) -> Option<PosTag> {
        let (var, rest) = text.split_once(", ")?;
        let (file, line) = rest.rsplit_once(':')?;
        let line = line.parse().ok()?;
        Some(PosTag { var: var.to_string(), loc: Location::new(file, line) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Null,
    Int(i64),
    Bool(bool),
    This,
    New {
        class: String,
        args: Vec<Expr>,
    },
    Var(String),
    Field {
        recv: Box<Expr>,
        name: String,
    },
    /// Method call; `recv == None` means an implicit `this` receiver.
    Call {
        recv: Option<Box<Expr>>,
        method: String,
        args: Vec<Expr>,
    },
    /// `lib.name(args)`
    Extern {
        name: String,
        args: Vec<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    InstanceOf {
        expr: Box<Expr>,
        class: String,
    },
    /// Implicit `IntBox` to `int` coercion, inserted by the resolver.
    Unbox(Box<Expr>),
    Helper {
        helper: Helper,
        arg: Box<Expr>,
        tag: PosTag,
    },
}

/// Applies `f` to every location in the program.
pub fn map_locations(program: &mut Program, f: &mut impl FnMut(&mut Location)) {
    for ext in &mut program.externs {
        f(&mut ext.loc);
    }
    for class in &mut program.classes {
        f(&mut class.loc);
        for field in &mut class.fields {
            f(&mut field.loc);
            if let Some(init) = &mut field.init {
                map_expr_locations(init, f);
            }
        }
        for method in class.constructor.iter_mut().chain(class.methods.iter_mut()) {
            f(&mut method.loc);
            map_block_locations(&mut method.body, f);
        }
    }
}

fn map_block_locations(stmts: &mut [Stmt], f: &mut impl FnMut(&mut Location)) {
    for stmt in stmts {
        f(&mut stmt.loc);
        match &mut stmt.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    map_expr_locations(e, f);
                }
            }
            StmtKind::Assign { target, value } => {
                if let LValue::Field { recv, .. } = target {
                    map_expr_locations(recv, f);
                }
                map_expr_locations(value, f);
            }
            StmtKind::Expr(e) | StmtKind::Throw(e) | StmtKind::Print(e) => map_expr_locations(e, f),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    map_expr_locations(e, f);
                }
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                map_expr_locations(cond, f);
                map_block_locations(then_branch, f);
                if let Some(b) = else_branch {
                    map_block_locations(b, f);
                }
            }
            StmtKind::While { cond, body } => {
                map_expr_locations(cond, f);
                map_block_locations(body, f);
            }
            StmtKind::Try { body, handler, .. } => {
                map_block_locations(body, f);
                map_block_locations(handler, f);
            }
        }
    }
}

fn map_expr_locations(expr: &mut Expr, f: &mut impl FnMut(&mut Location)) {
    f(&mut expr.loc);
    for child in expr_children_mut(expr) {
        map_expr_locations(child, f);
    }
    if let ExprKind::Helper { tag, .. } = &mut expr.kind {
        f(&mut tag.loc);
    }
}

fn expr_children_mut(expr: &mut Expr) -> Vec<&mut Expr> {
    match &mut expr.kind {
        ExprKind::Null | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::This | ExprKind::Var(_) => Vec::new(),
        ExprKind::New { args, .. } | ExprKind::Extern { args, .. } => args.iter_mut().collect(),
        ExprKind::Field { recv, .. } => vec![recv.as_mut()],
        ExprKind::Call { recv, args, .. } => {
            let mut out: Vec<&mut Expr> = recv.iter_mut().map(|r| r.as_mut()).collect();
            out.extend(args.iter_mut());
            out
        }
        ExprKind::Binary { lhs, rhs, .. } => vec![lhs.as_mut(), rhs.as_mut()],
        ExprKind::Unary { operand, .. } => vec![operand.as_mut()],
        ExprKind::InstanceOf { expr, .. } => vec![expr.as_mut()],
        ExprKind::Unbox(e) => vec![e.as_mut()],
        ExprKind::Helper { arg, .. } => vec![arg.as_mut()],
    }
}

/// Immediate sub-expressions, in evaluation order.
pub fn expr_children(expr: &Expr) -> Vec<&Expr> {
    match &expr.kind {
        ExprKind::Null | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::This | ExprKind::Var(_) => Vec::new(),
        ExprKind::New { args, .. } | ExprKind::Extern { args, .. } => args.iter().collect(),
        ExprKind::Field { recv, .. } => vec![recv.as_ref()],
        ExprKind::Call { recv, args, .. } => {
            let mut out: Vec<&Expr> = recv.iter().map(|r| r.as_ref()).collect();
            out.extend(args.iter());
            out
        }
        ExprKind::Binary { lhs, rhs, .. } => vec![lhs.as_ref(), rhs.as_ref()],
        ExprKind::Unary { operand, .. } => vec![operand.as_ref()],
        ExprKind::InstanceOf { expr, .. } => vec![expr.as_ref()],
        ExprKind::Unbox(e) => vec![e.as_ref()],
        ExprKind::Helper { arg, .. } => vec![arg.as_ref()],
    }
}

impl Program {
    /// Copy with every location erased, for structural comparison.
    pub fn without_locations(&self) -> Program {
        let mut copy = self.clone();
        copy.file = Arc::from("");
        map_locations(&mut copy, &mut |loc| *loc = Location::erased());
        copy
    }

    /// Structural equality ignoring locations.
    pub fn same_structure(&self, other: &Program) -> bool {
        let mut a = self.without_locations();
        let mut b = other.without_locations();
        a.file = Arc::from("");
        b.file = Arc::from("");
        a == b
    }
}
