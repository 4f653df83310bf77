use super::ast::*;

/// Renders a program as MiniLang source.
///
/// Statements and members are placed on their recorded source lines where
/// possible, so reparsing an instrumented program yields the same line
/// numbers the original had. Nodes with erased locations get a line each.
pub fn pretty_print(program: &Program) -> String {
    let mut w = Writer { out: String::new(), line: 1, indent: 0 };
    if program.instrumented {
        w.out.push_str(&format!("@instrumented {};", quote(&program.file)));
    }
    enum Item<'a> {
        Extern(&'a ExternDecl),
        Class(&'a ClassDecl),
    }
    let mut items: Vec<(u32, Item)> = program.externs.iter().map(|e| (e.loc.line, Item::Extern(e))).collect();
    items.extend(program.classes.iter().map(|c| (c.loc.line, Item::Class(c))));
    // Externs and classes live in separate lists; keep each list's order and
    // interleave by line only where lines agree with that order.
    let items = merge_by_line(items, program.externs.len());
    for item in items {
        match item {
            Item::Extern(e) => w.extern_decl(e),
            Item::Class(c) => w.class_decl(c),
        }
    }
    if !w.out.ends_with('\n') {
        w.out.push('\n');
    }
    w.out
}

/// Stable merge of two pre-ordered runs (`split` marks the boundary) by line.
fn merge_by_line<T>(items: Vec<(u32, T)>, split: usize) -> Vec<T> {
    let mut left: Vec<(u32, T)> = Vec::new();
    let mut right: Vec<(u32, T)> = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        if i < split {
            left.push(item);
        } else {
            right.push(item);
        }
    }
    let mut out = Vec::with_capacity(left.len() + right.len());
    let mut left = left.into_iter().peekable();
    let mut right = right.into_iter().peekable();
    loop {
        let take_left = match (left.peek(), right.peek()) {
            (Some(a), Some(b)) => a.0 <= b.0,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let next = if take_left { left.next() } else { right.next() };
        out.push(next.expect("peeked").1);
    }
    out
}

fn quote(text: &str) -> String {
    let escaped = text.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
    format!("\"{escaped}\"")
}

fn param_list(params: &[Param]) -> String {
    let parts: Vec<String> =
        params.iter().map(|p| format!("{}{} {}", if p.is_final { "final " } else { "" }, p.ty, p.name)).collect();
    parts.join(", ")
}

struct Writer {
    out: String,
    line: u32,
    indent: usize,
}

impl Writer {
    fn newline(&mut self) {
        self.out.push('\n');
        self.line += 1;
    }

    /// Moves to `line`, or to a fresh line when `line` is already behind us.
    /// Stays on the current line if it is the target.
    fn goto(&mut self, line: u32) {
        if self.out.is_empty() {
            while self.line < line {
                self.newline();
            }
        } else if line == self.line {
            self.out.push(' ');
            return;
        } else if line > self.line {
            while self.line < line {
                self.newline();
            }
        } else {
            self.newline();
        }
        self.out.push_str(&"    ".repeat(self.indent));
    }

    fn push(&mut self, text: &str) {
        self.out.push_str(text);
    }

    fn extern_decl(&mut self, e: &ExternDecl) {
        self.goto(e.loc.line);
        let stub = match e.stub {
            StubKind::ReturnsNull => "null".to_string(),
            StubKind::ReturnsFresh => "new".to_string(),
            StubKind::Echo => "echo".to_string(),
            StubKind::IsNull => "isnull".to_string(),
            StubKind::Callback => format!("callback {}", e.callback.as_deref().unwrap_or_default()),
        };
        self.push(&format!("extern {} {}({}) = {stub};", e.ret, e.name, param_list(&e.params)));
    }

    fn class_decl(&mut self, c: &ClassDecl) {
        self.goto(c.loc.line);
        let open_line = self.line;
        self.push(&format!("class {}", c.name));
        if let Some(sup) = &c.superclass {
            self.push(&format!(" extends {sup}"));
        }
        self.push(" {");
        self.indent += 1;

        enum Member<'a> {
            Field(&'a FieldDecl),
            Method(&'a MethodDecl),
        }
        let mut members: Vec<(u32, Member)> = c.fields.iter().map(|f| (f.loc.line, Member::Field(f))).collect();
        let split = members.len();
        let methods: Vec<(u32, &MethodDecl)> =
            c.constructor.iter().chain(c.methods.iter()).map(|m| (m.loc.line, m)).collect();
        let ctor_count = usize::from(c.constructor.is_some());
        members.extend(merge_by_line(methods, ctor_count).into_iter().map(|m| (m.loc.line, Member::Method(m))));
        for member in merge_by_line(members, split) {
            match member {
                Member::Field(f) => {
                    self.goto(f.loc.line);
                    self.push(&format!("{} {}", f.ty, f.name));
                    if let Some(init) = &f.init {
                        self.push(" = ");
                        self.push(&expr(init, 0));
                    }
                    self.push(";");
                }
                Member::Method(m) => self.method(c, m),
            }
        }
        self.indent -= 1;
        self.close(open_line);
    }

    fn close(&mut self, open_line: u32) {
        if self.line == open_line {
            self.push(" }");
        } else {
            self.newline();
            self.out.push_str(&"    ".repeat(self.indent));
            self.push("}");
        }
    }

    fn method(&mut self, class: &ClassDecl, m: &MethodDecl) {
        self.goto(m.loc.line);
        if m.is_constructor() {
            self.push(&format!("{}({}) ", class.name, param_list(&m.params)));
        } else {
            self.push(&format!("{} {}({}) ", m.ret, m.name, param_list(&m.params)));
        }
        self.block(&m.body);
    }

    fn block(&mut self, stmts: &[Stmt]) {
        let open_line = self.line;
        self.push("{");
        self.indent += 1;
        for s in stmts {
            self.stmt(s);
        }
        self.indent -= 1;
        self.close(open_line);
    }

    fn stmt(&mut self, s: &Stmt) {
        self.goto(s.loc.line);
        self.stmt_body(s);
    }

    fn stmt_body(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { ty, name, init, is_final } => {
                if *is_final {
                    self.push("final ");
                }
                self.push(&format!("{ty} {name}"));
                if let Some(init) = init {
                    self.push(" = ");
                    self.push(&expr(init, 0));
                }
                self.push(";");
            }
            StmtKind::Assign { target, value } => {
                let lhs = match target {
                    LValue::Var(name) => name.clone(),
                    LValue::Field { recv, name } => format!("{}.{name}", expr(recv, POSTFIX)),
                };
                self.push(&format!("{lhs} = {};", expr(value, 0)));
            }
            StmtKind::Expr(e) => self.push(&format!("{};", expr(e, 0))),
            StmtKind::Return(None) => self.push("return;"),
            StmtKind::Return(Some(e)) => self.push(&format!("return {};", expr(e, 0))),
            StmtKind::If { cond, then_branch, else_branch } => {
                self.push(&format!("if ({}) ", expr(cond, 0)));
                self.block(then_branch);
                if let Some(else_branch) = else_branch {
                    self.push(" else ");
                    match else_branch.as_slice() {
                        [nested @ Stmt { kind: StmtKind::If { .. }, .. }] if nested.loc.line <= self.line => {
                            self.stmt_body(nested)
                        }
                        _ => self.block(else_branch),
                    }
                }
            }
            StmtKind::While { cond, body } => {
                self.push(&format!("while ({}) ", expr(cond, 0)));
                self.block(body);
            }
            StmtKind::Try { body, var, handler } => {
                self.push("try ");
                self.block(body);
                self.push(&format!(" catch ({NPE_CLASS} {var}) "));
                self.block(handler);
            }
            StmtKind::Throw(e) => self.push(&format!("throw {};", expr(e, 0))),
            StmtKind::Print(e) => self.push(&format!("print({});", expr(e, 0))),
        }
    }
}

const UNARY: u8 = 7;
const POSTFIX: u8 = 8;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne => 3,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
        BinOp::Add | BinOp::Sub => 5,
        BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
    }
}

fn args(list: &[Expr]) -> String {
    list.iter().map(|a| expr(a, 0)).collect::<Vec<_>>().join(", ")
}

/// Prints `e`, parenthesized if its precedence is below `min`.
fn expr(e: &Expr, min: u8) -> String {
    let (text, prec) = match &e.kind {
        ExprKind::Null => ("null".to_string(), POSTFIX),
        ExprKind::Int(v) if *v < 0 => (v.to_string(), UNARY),
        ExprKind::Int(v) => (v.to_string(), POSTFIX),
        ExprKind::Bool(b) => (b.to_string(), POSTFIX),
        ExprKind::This => ("this".to_string(), POSTFIX),
        ExprKind::Var(name) => (name.clone(), POSTFIX),
        ExprKind::New { class, args: a } => (format!("new {class}({})", args(a)), POSTFIX),
        ExprKind::Field { recv, name } => (format!("{}.{name}", expr(recv, POSTFIX)), POSTFIX),
        ExprKind::Call { recv: None, method, args: a } => (format!("{method}({})", args(a)), POSTFIX),
        ExprKind::Call { recv: Some(r), method, args: a } => {
            (format!("{}.{method}({})", expr(r, POSTFIX), args(a)), POSTFIX)
        }
        ExprKind::Extern { name, args: a } => (format!("lib.{name}({})", args(a)), POSTFIX),
        ExprKind::Helper { helper, arg, tag } => {
            (format!("{}({}, {})", helper.name(), expr(arg, 0), quote(&tag.render())), POSTFIX)
        }
        ExprKind::Unbox(inner) => return expr(inner, min),
        ExprKind::Unary { op, operand } => {
            let symbol = if *op == UnOp::Not { "!" } else { "-" };
            // `-5` would read back as a literal, so negated literals keep parentheses.
            let inner = match operand.kind {
                ExprKind::Int(_) if *op == UnOp::Neg => format!("({})", expr(operand, 0)),
                _ => {
                    let text = expr(operand, UNARY);
                    if *op == UnOp::Neg && text.starts_with('-') {
                        format!("({text})")
                    } else {
                        text
                    }
                }
            };
            (format!("{symbol}{inner}"), UNARY)
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = binop_prec(*op);
            (format!("{} {} {}", expr(lhs, p), op.symbol(), expr(rhs, p + 1)), p)
        }
        ExprKind::InstanceOf { expr: operand, class } => (format!("{} instanceof {class}", expr(operand, 4)), 4),
    };
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, resolve};
    use super::*;

    fn round_trip(src: &str) {
        let p = resolve(parse(src, "t.mini").unwrap()).unwrap();
        let text = pretty_print(&p);
        let q = resolve(parse(&text, "t.mini").unwrap()).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(p.same_structure(&q), "round trip changed structure:\n{text}");
    }

    #[test]
    fn empty_class_prints_on_one_line() {
        let p = parse("class A { void main() { } }", "t.mini").unwrap();
        assert_eq!(pretty_print(&p).trim(), "class A { void main() { } }");
    }

    #[test]
    fn precedence_and_negation_survive() {
        round_trip(
            "class A { int k;\n void main() {\n int x = -(5) + -3 * (2 - 1);\n int y = -(-x);\n\
             boolean b = !(x < 3) && (x == 1 || y != 2);\n print(x - (y - 1));\n } }",
        );
    }

    #[test]
    fn lines_are_preserved() {
        let src = "class A {\n  void main() {\n\n    Object o;\n    print(1);\n  }\n}\n";
        let p = parse(src, "t.mini").unwrap();
        let q = parse(&pretty_print(&p), "t.mini").unwrap();
        let lines = |p: &Program| -> Vec<u32> { p.classes[0].methods[0].body.iter().map(|s| s.loc.line).collect() };
        assert_eq!(lines(&p), lines(&q));
    }

    #[test]
    fn else_if_chain_round_trips() {
        round_trip(
            "class A { void main() { int x = 1; if (x == 1) { print(1); } else if (x == 2) { print(2); } \
             else { print(3); } } }",
        );
    }
}
