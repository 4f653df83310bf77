use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

/// Parses MiniLang source text.
///
/// An instrumented program starts with `@instrumented "<original file>";`,
/// and its locations are attributed to the original file name.
pub fn parse(source: &str, filename: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source, filename)?;
    let mut parser = Parser { tokens, pos: 0, file: Arc::from(filename), reported_file: filename.to_string() };
    parser.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// File name attached to locations.
    file: Arc<str>,
    /// File name used in error messages.
    reported_file: String,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn line(&self) -> u32 {
        self.tokens[self.pos].line
    }

    fn loc(&self) -> Location {
        Location { file: self.file.clone(), line: self.line() }
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.tokens[self.pos];
        Err(ParseError { file: self.reported_file.clone(), line: t.line, col: t.col, message: message.into() })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => self.error(format!("expected {what}, found {}", describe(&other))),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut instrumented = false;
        if self.eat(&Tok::At) {
            match self.bump() {
                Tok::Ident(word) if word == "instrumented" => {}
                _ => return self.error("expected `instrumented` after `@`"),
            }
            match self.bump() {
                Tok::Str(original) => {
                    self.file = Arc::from(original.as_str());
                }
                _ => return self.error("expected original file name after `@instrumented`"),
            }
            self.expect(Tok::Semi, "`;`")?;
            instrumented = true;
        }
        let mut program = Program { file: self.file.clone(), instrumented, externs: Vec::new(), classes: Vec::new() };
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Extern => program.externs.push(self.extern_decl()?),
                Tok::Class => program.classes.push(self.class_decl()?),
                other => return self.error(format!("expected `class` or `extern`, found {}", describe(other))),
            }
        }
        Ok(program)
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::IntKw => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::BooleanKw => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::VoidKw => {
                self.bump();
                Ok(Type::Void)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Type::Ref(name))
            }
            other => self.error(format!("expected a type, found {}", describe(&other))),
        }
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let is_final = self.eat(&Tok::Final);
                let ty = self.ty()?;
                let name = self.ident("parameter name")?;
                params.push(Param { name, ty, is_final });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        Ok(params)
    }

    fn extern_decl(&mut self) -> PResult<ExternDecl> {
        let loc = self.loc();
        self.expect(Tok::Extern, "`extern`")?;
        let ret = self.ty()?;
        let name = self.ident("extern name")?;
        let params = self.params()?;
        self.expect(Tok::Assign, "`=` followed by a stub kind")?;
        let (stub, callback) = match self.bump() {
            Tok::Null => (StubKind::ReturnsNull, None),
            Tok::New => (StubKind::ReturnsFresh, None),
            Tok::Ident(w) if w == "echo" => (StubKind::Echo, None),
            Tok::Ident(w) if w == "isnull" => (StubKind::IsNull, None),
            Tok::Ident(w) if w == "callback" => {
                let target = self.ident("callback method name")?;
                (StubKind::Callback, Some(target))
            }
            _ => {
                self.pos -= 1;
                return self.error("expected stub kind: null, new, echo, isnull or callback <method>");
            }
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(ExternDecl { name, params, ret, stub, callback, loc })
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let loc = self.loc();
        self.expect(Tok::Class, "`class`")?;
        let name = self.ident("class name")?;
        let superclass = if self.eat(&Tok::Extends) { Some(self.ident("superclass name")?) } else { None };
        self.expect(Tok::LBrace, "`{`")?;
        let mut class = ClassDecl { name, superclass, fields: Vec::new(), constructor: None, methods: Vec::new(), loc };
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return self.error("expected `}` to close class body");
            }
            let member_loc = self.loc();
            if matches!(self.peek(), Tok::Ident(n) if *n == class.name) && self.peek_at(1) == &Tok::LParen {
                self.bump();
                let params = self.params()?;
                let body = self.block()?;
                if class.constructor.is_some() {
                    return Err(ParseError {
                        file: self.reported_file.clone(),
                        line: member_loc.line,
                        col: 1,
                        message: format!("class `{}` declares more than one constructor", class.name),
                    });
                }
                class.constructor = Some(MethodDecl {
                    name: CONSTRUCTOR_NAME.to_string(),
                    params,
                    ret: Type::Void,
                    body,
                    loc: member_loc,
                });
                continue;
            }
            let ty = self.ty()?;
            let name = self.ident("member name")?;
            if self.peek() == &Tok::LParen {
                let params = self.params()?;
                let body = self.block()?;
                class.methods.push(MethodDecl { name, params, ret: ty, body, loc: member_loc });
            } else {
                let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
                self.expect(Tok::Semi, "`;`")?;
                class.fields.push(FieldDecl { name, ty, init, loc: member_loc });
            }
        }
        Ok(class)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return self.error("expected `}` to close block");
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn looks_like_decl(&self) -> bool {
        match self.peek() {
            Tok::IntKw | Tok::BooleanKw | Tok::Final => true,
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Ident(_)),
            _ => false,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        let kind = match self.peek() {
            Tok::Return => {
                self.bump();
                let value = if self.peek() == &Tok::Semi { None } else { Some(self.expr()?) };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Return(value)
            }
            Tok::If => return self.if_stmt(),
            Tok::While => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Try => {
                self.bump();
                let body = self.block()?;
                self.expect(Tok::Catch, "`catch`")?;
                self.expect(Tok::LParen, "`(`")?;
                let caught = self.ident("exception type")?;
                if caught != NPE_CLASS {
                    return self.error(format!("only `{NPE_CLASS}` can be caught"));
                }
                let var = self.ident("catch variable")?;
                self.expect(Tok::RParen, "`)`")?;
                let handler = self.block()?;
                StmtKind::Try { body, var, handler }
            }
            Tok::Throw => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Throw(e)
            }
            Tok::Print => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Print(e)
            }
            _ if self.looks_like_decl() => {
                let is_final = self.eat(&Tok::Final);
                let ty = self.ty()?;
                let name = self.ident("variable name")?;
                let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
                self.expect(Tok::Semi, "`;`")?;
                StmtKind::Decl { ty, name, init, is_final }
            }
            _ => {
                let e = self.expr()?;
                if self.eat(&Tok::Assign) {
                    let target = match e.kind {
                        ExprKind::Var(name) => LValue::Var(name),
                        ExprKind::Field { recv, name } => LValue::Field { recv, name },
                        _ => return self.error("left-hand side of assignment must be a variable or field"),
                    };
                    let value = self.expr()?;
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Assign { target, value }
                } else {
                    self.expect(Tok::Semi, "`;`")?;
                    StmtKind::Expr(e)
                }
            }
        };
        Ok(Stmt { kind, loc })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        self.expect(Tok::If, "`if`")?;
        self.expect(Tok::LParen, "`(`")?;
        let cond = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        let then_branch = self.block()?;
        let else_branch = if self.eat(&Tok::Else) {
            if self.peek() == &Tok::If {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, loc })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn binary_level(&mut self, ops: &[(Tok, BinOp)], next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (tok, op) in ops {
                if self.peek() == tok {
                    let loc = self.loc();
                    self.bump();
                    let rhs = next(self)?;
                    lhs = Expr::new(ExprKind::Binary { op: *op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc);
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[(Tok::OrOr, BinOp::Or)], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[(Tok::AndAnd, BinOp::And)], Self::eq_expr)
    }

    fn eq_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[(Tok::EqEq, BinOp::Eq), (Tok::NotEq, BinOp::Ne)], Self::rel_expr)
    }

    fn rel_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                Tok::InstanceOf => {
                    let loc = self.loc();
                    self.bump();
                    let class = self.ident("class name after `instanceof`")?;
                    lhs = Expr::new(ExprKind::InstanceOf { expr: Box::new(lhs), class }, loc);
                    continue;
                }
                _ => return Ok(lhs),
            };
            let loc = self.loc();
            self.bump();
            let rhs = self.add_expr()?;
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, loc);
        }
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)], Self::mul_expr)
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[(Tok::Star, BinOp::Mul), (Tok::Slash, BinOp::Div), (Tok::Percent, BinOp::Rem)],
            Self::unary_expr,
        )
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                let operand = self.unary_expr()?;
                Ok(Expr::new(ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, loc))
            }
            Tok::Minus => {
                self.bump();
                if let Tok::Int(value) = self.peek().clone() {
                    self.bump();
                    return self.postfix(Expr::new(ExprKind::Int(-value), loc));
                }
                let operand = self.unary_expr()?;
                Ok(Expr::new(ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, loc))
            }
            _ => {
                let primary = self.primary()?;
                self.postfix(primary)
            }
        }
    }

    fn postfix(&mut self, mut expr: Expr) -> PResult<Expr> {
        while self.eat(&Tok::Dot) {
            let loc = self.loc();
            let name = self.ident("member name after `.`")?;
            if self.peek() == &Tok::LParen {
                let args = self.args()?;
                expr = Expr::new(ExprKind::Call { recv: Some(Box::new(expr)), method: name, args }, loc);
            } else {
                expr = Expr::new(ExprKind::Field { recv: Box::new(expr), name }, loc);
            }
        }
        Ok(expr)
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let kind = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                ExprKind::Int(v)
            }
            Tok::True => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Null => {
                self.bump();
                ExprKind::Null
            }
            Tok::This => {
                self.bump();
                ExprKind::This
            }
            Tok::New => {
                self.bump();
                let class = self.ident("class name after `new`")?;
                let args = self.args()?;
                ExprKind::New { class, args }
            }
            Tok::Lib => {
                self.bump();
                self.expect(Tok::Dot, "`.` after `lib`")?;
                let name = self.ident("extern name")?;
                let args = self.args()?;
                ExprKind::Extern { name, args }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                return Ok(inner);
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() != &Tok::LParen {
                    ExprKind::Var(name)
                } else if let Some(helper) = Helper::from_name(&name) {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::Comma, "`,` before position tag")?;
                    let tag = match self.bump() {
                        Tok::Str(text) => match PosTag::parse(&text) {
                            Some(tag) => tag,
                            None => {
                                self.pos -= 1;
                                return self.error("malformed position tag, expected \"<var>, <file>:<line>\"");
                            }
                        },
                        _ => {
                            self.pos -= 1;
                            return self.error("expected position tag string");
                        }
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    ExprKind::Helper { helper, arg: Box::new(arg), tag }
                } else {
                    let args = self.args()?;
                    ExprKind::Call { recv: None, method: name, args }
                }
            }
            other => return self.error(format!("expected an expression, found {}", describe(&other))),
        };
        Ok(Expr::new(kind, loc))
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(n) => format!("identifier `{n}`"),
        Tok::Int(v) => format!("integer `{v}`"),
        Tok::Str(_) => "string literal".to_string(),
        Tok::Eof => "end of file".to_string(),
        other => format!("`{}`", token_text(other)),
    }
}

fn token_text(tok: &Tok) -> &'static str {
    match tok {
        Tok::Class => "class",
        Tok::Extends => "extends",
        Tok::Extern => "extern",
        Tok::Lib => "lib",
        Tok::Final => "final",
        Tok::New => "new",
        Tok::Null => "null",
        Tok::True => "true",
        Tok::False => "false",
        Tok::This => "this",
        Tok::Return => "return",
        Tok::If => "if",
        Tok::Else => "else",
        Tok::While => "while",
        Tok::Try => "try",
        Tok::Catch => "catch",
        Tok::Throw => "throw",
        Tok::Print => "print",
        Tok::InstanceOf => "instanceof",
        Tok::IntKw => "int",
        Tok::BooleanKw => "boolean",
        Tok::VoidKw => "void",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::At => "@",
        Tok::Assign => "=",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Percent => "%",
        Tok::Bang => "!",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::Ident(_) | Tok::Int(_) | Tok::Str(_) | Tok::Eof => "",
    }
}
