//! Seeded generator of well-formed MiniLang programs for paired-run testing.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// No expression can ever evaluate to null, so no ghost is ever created.
    GhostFree,
    /// Null literals, unset fields and guarded dereferences.
    NullBearing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub population: Population,
    /// Maximum expression nesting.
    pub max_depth: u32,
    /// Helper methods besides `main`.
    pub methods: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { population: Population::GhostFree, max_depth: 6, methods: 3 }
    }
}

const PRELUDE: &str = "\
extern Node relay(Node n) = echo;
extern boolean absent(Node n) = isnull;
extern Node make() = new;

class Node {
  int val;
  Node next;
  int get() { return this.val; }
  Node set(int v) { this.val = v; return this; }
  Node link(Node n) { this.next = n; return this; }
}
";

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Node,
}

struct Var {
    name: String,
    ty: Ty,
    /// Loop counters are never reassigned.
    frozen: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: GeneratorConfig,
    scopes: Vec<Vec<Var>>,
    next_name: usize,
    /// Index of the method being generated; calls may only target later ones.
    method: usize,
    loop_depth: u32,
    try_depth: u32,
    out: String,
    indent: usize,
}

/// Source of a random program whose every call terminates.
pub fn generate_program(seed: u64, cfg: GeneratorConfig) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        scopes: Vec::new(),
        next_name: 0,
        method: 0,
        loop_depth: 0,
        try_depth: 0,
        out: String::from(PRELUDE),
        indent: 1,
    };
    g.out.push_str("\nclass Main {\n  int count;\n  Node keep;\n");
    for k in 0..cfg.methods {
        g.method = k;
        g.helper_method(k);
    }
    g.method = usize::MAX;
    g.main_method();
    g.out.push_str("}\n");
    g.out
}

fn method_ty(k: usize) -> Ty {
    if k.is_multiple_of(2) {
        Ty::Int
    } else {
        Ty::Node
    }
}

impl Gen {
    fn nulls(&self) -> bool {
        self.cfg.population == Population::NullBearing
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next_name += 1;
        format!("{prefix}{}", self.next_name)
    }

    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn vars(&self, ty: Ty) -> Vec<&Var> {
        self.scopes.iter().flatten().filter(|v| v.ty == ty).collect()
    }

    fn declare(&mut self, name: &str, ty: Ty, frozen: bool) {
        self.scopes.last_mut().expect("open scope").push(Var { name: name.to_string(), ty, frozen });
    }

    fn callable(&self) -> Vec<usize> {
        if self.loop_depth > 0 {
            return Vec::new();
        }
        let first = if self.method == usize::MAX { 0 } else { self.method + 1 };
        (first..self.cfg.methods).collect()
    }

    fn helper_method(&mut self, k: usize) {
        self.scopes = vec![Vec::new()];
        let (ret, header) = match method_ty(k) {
            Ty::Int => ("int", format!("m{k}(int a, Node n)")),
            Ty::Node => ("Node", format!("m{k}(Node n, int a)")),
        };
        self.declare("a", Ty::Int, false);
        self.declare("n", Ty::Node, false);
        self.line(&format!("{ret} {header} {{"));
        self.indent += 1;
        self.block_body(2);
        let e = self.expr(method_ty(k), self.cfg.max_depth);
        self.line(&format!("return {e};"));
        self.indent -= 1;
        self.line("}");
    }

    fn main_method(&mut self) {
        self.scopes = vec![Vec::new()];
        self.line("void main() {");
        self.indent += 1;
        self.line("this.keep = new Node();");
        self.block_body(2);
        let e = self.expr(Ty::Int, 2);
        self.line(&format!("print({e});"));
        self.indent -= 1;
        self.line("}");
    }

    fn block_body(&mut self, nesting: u32) {
        let n = self.rng.gen_range(1..=4);
        for _ in 0..n {
            self.stmt(nesting);
        }
    }

    fn nested_block(&mut self, nesting: u32) {
        self.indent += 1;
        self.scopes.push(Vec::new());
        self.block_body(nesting);
        self.scopes.pop();
        self.indent -= 1;
    }

    fn stmt(&mut self, nesting: u32) {
        let d = self.cfg.max_depth;
        let choice = self.rng.gen_range(0..11);
        match choice {
            0 | 1 => {
                let ty = if self.rng.gen_bool(0.5) { Ty::Int } else { Ty::Node };
                let name = self.fresh("v");
                let e = self.expr(ty, d);
                let kw = if ty == Ty::Int { "int" } else { "Node" };
                self.line(&format!("{kw} {name} = {e};"));
                self.declare(&name, ty, false);
            }
            2 | 3 => {
                let ty = if self.rng.gen_bool(0.5) { Ty::Int } else { Ty::Node };
                let targets: Vec<String> = self.vars(ty).iter().filter(|v| !v.frozen).map(|v| v.name.clone()).collect();
                if let Some(t) = targets.choose(&mut self.rng).cloned() {
                    let e = self.expr(ty, d);
                    self.line(&format!("{t} = {e};"));
                }
            }
            4 => {
                let e = self.expr(Ty::Int, d);
                self.line(&format!("this.count = {e};"));
            }
            5 => {
                if self.rng.gen_bool(0.5) {
                    let e = self.expr(Ty::Node, d);
                    self.line(&format!("this.keep = {e};"));
                } else {
                    let r = self.node_var();
                    let e = self.expr(Ty::Int, d);
                    self.line(&format!("{r}.val = {e};"));
                }
            }
            6 => {
                let ty = if self.rng.gen_bool(0.7) { Ty::Int } else { Ty::Node };
                let e = self.expr(ty, d);
                self.line(&format!("print({e});"));
            }
            7 if nesting > 0 => {
                let c = self.bool_expr(d);
                self.line(&format!("if ({c}) {{"));
                self.nested_block(nesting - 1);
                if self.rng.gen_bool(0.5) {
                    self.line("} else {");
                    self.nested_block(nesting - 1);
                }
                self.line("}");
            }
            8 if nesting > 0 && self.loop_depth < 2 => {
                let w = self.fresh("w");
                let bound = self.rng.gen_range(1..=3);
                self.line(&format!("int {w} = 0;"));
                self.declare(&w, Ty::Int, true);
                self.line(&format!("while ({w} < {bound}) {{"));
                self.loop_depth += 1;
                self.indent += 1;
                self.scopes.push(Vec::new());
                self.block_body(nesting - 1);
                self.line(&format!("{w} = {w} + 1;"));
                self.scopes.pop();
                self.indent -= 1;
                self.loop_depth -= 1;
                self.line("}");
            }
            9 if nesting > 0 && self.nulls() && self.try_depth == 0 => {
                self.line("try {");
                self.try_depth += 1;
                self.nested_block(nesting - 1);
                self.try_depth -= 1;
                let e = self.fresh("e");
                self.line(&format!("}} catch (NullPointerException {e}) {{"));
                self.indent += 1;
                let marker = self.rng.gen_range(100..200);
                self.line(&format!("print({marker});"));
                self.indent -= 1;
                self.line("}");
            }
            _ => {
                let r = self.node_var();
                let e = self.expr(Ty::Node, d);
                self.line(&format!("{r}.link({e});"));
            }
        }
    }

    /// Pure node operand: a variable, or `this.keep`.
    fn node_var(&mut self) -> String {
        let names: Vec<String> = self.vars(Ty::Node).iter().map(|v| v.name.clone()).collect();
        match names.choose(&mut self.rng) {
            Some(n) if self.rng.gen_bool(0.8) => n.clone(),
            _ => "this.keep".to_string(),
        }
    }

    fn int_var(&mut self) -> String {
        let names: Vec<String> = self.vars(Ty::Int).iter().map(|v| v.name.clone()).collect();
        match names.choose(&mut self.rng) {
            Some(n) if self.rng.gen_bool(0.8) => n.clone(),
            _ => "this.count".to_string(),
        }
    }

    fn expr(&mut self, ty: Ty, depth: u32) -> String {
        match ty {
            Ty::Int => self.int_expr(depth),
            Ty::Node => self.node_expr(depth),
        }
    }

    fn int_expr(&mut self, depth: u32) -> String {
        if depth <= 1 || self.rng.gen_bool(0.35) {
            return if self.rng.gen_bool(0.5) { self.rng.gen_range(0..10).to_string() } else { self.int_var() };
        }
        match self.rng.gen_range(0..5) {
            0 | 1 => {
                let op = ["+", "-", "*"].choose(&mut self.rng).copied().unwrap_or("+");
                let l = self.int_expr(depth - 1);
                let r = self.int_expr(depth - 1);
                format!("({l} {op} {r})")
            }
            2 => {
                let mut n = self.node_expr(depth - 1);
                if n == "null" {
                    n = self.node_var();
                }
                format!("{n}.get()")
            }
            3 => match self.call(Ty::Int, depth) {
                Some(c) => c,
                None => format!("-{}", self.int_expr(depth - 1)),
            },
            _ => {
                let r = self.node_var();
                format!("{r}.val")
            }
        }
    }

    fn node_expr(&mut self, depth: u32) -> String {
        if depth <= 1 || self.rng.gen_bool(0.3) {
            if self.nulls() && self.rng.gen_bool(0.15) {
                return "null".to_string();
            }
            return match self.rng.gen_range(0..3) {
                0 => "new Node()".to_string(),
                _ => self.node_var(),
            };
        }
        match self.rng.gen_range(0..7) {
            0 => {
                let v = self.int_expr(depth - 1);
                format!("new Node().set({v})")
            }
            1 => {
                let n = self.node_expr(depth - 1);
                format!("lib.relay({n})")
            }
            2 => "lib.make()".to_string(),
            3 => {
                let r = self.node_var();
                let n = self.node_expr(depth - 1);
                format!("{r}.link({n})")
            }
            4 if self.nulls() => {
                let r = self.node_var();
                format!("{r}.next")
            }
            _ => match self.call(Ty::Node, depth) {
                Some(c) => c,
                None => self.node_var(),
            },
        }
    }

    fn call(&mut self, ty: Ty, depth: u32) -> Option<String> {
        let targets: Vec<usize> = self.callable().into_iter().filter(|&k| method_ty(k) == ty).collect();
        let k = *targets.choose(&mut self.rng)?;
        let i = self.int_expr(depth - 1);
        let n = self.node_expr(depth - 1);
        let mut s = String::new();
        match ty {
            Ty::Int => write!(s, "m{k}({i}, {n})"),
            Ty::Node => write!(s, "m{k}({n}, {i})"),
        }
        .expect("writing to a string");
        Some(s)
    }

    fn bool_expr(&mut self, depth: u32) -> String {
        let leaf = depth <= 1 || self.rng.gen_bool(0.4);
        let pick = if leaf { self.rng.gen_range(0..5) } else { self.rng.gen_range(0..8) };
        match pick {
            0 => {
                let op = ["<", "<=", ">", ">=", "==", "!="].choose(&mut self.rng).copied().unwrap_or("<");
                let l = self.int_expr(depth.saturating_sub(1).max(1));
                let r = self.int_expr(depth.saturating_sub(1).max(1));
                format!("{l} {op} {r}")
            }
            1 => {
                let (a, b) = (self.node_var(), self.node_var());
                let op = if self.rng.gen_bool(0.5) { "==" } else { "!=" };
                format!("{a} {op} {b}")
            }
            2 => {
                let a = self.node_var();
                let op = if self.rng.gen_bool(0.5) { "==" } else { "!=" };
                format!("{a} {op} null")
            }
            3 => format!("{} instanceof Node", self.node_var()),
            4 => format!("lib.absent({})", self.node_var()),
            5 => format!("!({})", self.bool_expr(depth - 1)),
            6 => format!("({} && {})", self.bool_expr(depth - 1), self.bool_expr(depth - 1)),
            _ => format!("({} || {})", self.bool_expr(depth - 1), self.bool_expr(depth - 1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;

    #[test]
    fn generated_programs_resolve() {
        for population in [Population::GhostFree, Population::NullBearing] {
            let cfg = GeneratorConfig { population, ..GeneratorConfig::default() };
            for seed in 0..40 {
                let src = generate_program(seed, cfg);
                if let Err(e) = load(&src, "gen.mini") {
                    panic!("seed {seed}: {e}\n{src}");
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig::default();
        assert_eq!(generate_program(7, cfg), generate_program(7, cfg));
        assert_ne!(generate_program(7, cfg), generate_program(8, cfg));
    }
}
