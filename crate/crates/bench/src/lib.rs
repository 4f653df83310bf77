//! Inputs for the pipeline benchmarks.

use std::fs;
use std::path::{Path, PathBuf};

use ghosttrace::lang::{load, Program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// `(file name, source)` for every `.mini` file in `dir`, sorted.
pub fn sources(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<PathBuf> =
        fs::read_dir(dir).map(|rd| rd.filter_map(Result::ok).map(|e| e.path()).collect()).unwrap_or_default();
    files.retain(|p| p.extension().is_some_and(|x| x == "mini"));
    files.sort();
    files
        .into_iter()
        .filter_map(|p| {
            let name = p.file_name()?.to_string_lossy().into_owned();
            Some((name, fs::read_to_string(&p).ok()?))
        })
        .collect()
}

pub fn corpus() -> Vec<(String, Program)> {
    sources(&corpus_dir())
        .into_iter()
        .map(|(name, src)| {
            let p = load(&src, &name).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, p)
        })
        .collect()
}

/// A program whose nulls are never read, spending its time in field reads, calls and
/// reference assignments.
pub fn compute_loop(iterations: u32) -> Program {
    let src = format!(
        "class Cell {{
  int v;
  Cell next;
  Cell(int v) {{ this.v = v; }}
  Cell step(Cell other) {{ return other; }}
}}
class Main {{
  void main() {{
    Cell a = new Cell(1);
    Cell b = new Cell(2);
    a.next = b;
    b.next = a;
    Cell cur = a;
    int sum = 0;
    int i = 0;
    while (i < {iterations}) {{
      cur = cur.step(cur.next);
      sum = sum + cur.v;
      i = i + 1;
    }}
    print(sum);
  }}
}}
"
    );
    load(&src, "loop.mini").expect("compute loop loads")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ghosttrace::runtime::{interpret, Mode, Outcome};
    use ghosttrace::transform::transform_program;

    #[test]
    fn compute_loop_is_ghost_free() {
        let p = compute_loop(10);
        let (q, _) = transform_program(&p).unwrap();
        let a = interpret(&p, Mode::Original).unwrap();
        let b = interpret(&q, Mode::Instrumented).unwrap();
        assert!(matches!(b.outcome, Outcome::Normal(_)));
        assert_eq!(a.output, vec!["15".to_string()]);
        assert_eq!(a.output, b.output);
        assert!(b.npe_reports.is_empty());
    }

    #[test]
    fn corpus_loads() {
        assert!(corpus().len() >= 14);
    }
}
