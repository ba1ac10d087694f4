//! A synthetic resource at the scale of a full legal-advice grammar set.
//!
//! Four background graphs of 97,861 paths each (a 46 × 46 × 46 chain beside
//! a 525-entry lexicon), twenty core graphs averaging 1,724 paths
//! (41 × 42 plus 0 to 4 extra alternatives), and two request graphs of 1,109
//! (33 × 33 + 20) and 766 (27 × 28 + 10) paths. Every word is unique to its
//! graph, so no two intents can render the same text.

use std::fmt::Write as _;
use std::path::Path;

use lgg_core::{parse_grammar, parse_lexicon, IntentSpec, ResourceSet};

pub const SCALE_BACKGROUNDS: usize = 4;
pub const SCALE_CORES: usize = 20;

fn quoted(prefix: &str, n: usize) -> String {
    (0..n).map(|i| format!("\"{prefix}{i}\"")).collect::<Vec<_>>().join(" | ")
}

/// A chain of boxes with the given alternative counts, plus an optional
/// parallel box (terminal alternatives or a lexicon reference).
fn chain_graph(name: &str, word: &str, widths: &[usize], parallel: Option<String>) -> String {
    let mut s = format!("graph {name}\nnode 0 <START>\nnode 1 <END>\n");
    for (k, w) in widths.iter().enumerate() {
        writeln!(s, "node {} {}", k + 2, quoted(&format!("{word}{k}w"), *w)).unwrap();
    }
    let p = widths.len() + 2;
    if let Some(content) = &parallel {
        writeln!(s, "node {p} {content}").unwrap();
    }
    let mut prev = 0;
    for k in 0..widths.len() {
        writeln!(s, "edge {prev} {}", k + 2).unwrap();
        prev = k + 2;
    }
    writeln!(s, "edge {prev} 1").unwrap();
    if parallel.is_some() {
        writeln!(s, "edge 0 {p}\nedge {p} 1").unwrap();
    }
    s + "end\n"
}

pub struct ScaleFixture {
    /// `(file stem, source)` pairs.
    pub grammars: Vec<(String, String)>,
    pub lexicons: Vec<(String, String)>,
    pub intents: Vec<IntentSpec>,
}

pub fn scale_fixture() -> ScaleFixture {
    let mut grammars = Vec::new();
    let mut lexicons = Vec::new();
    for b in 0..SCALE_BACKGROUNDS {
        let lex = format!("bg{b}lex");
        let entries: String = (0..525).map(|i| format!("bg{b}l{i} bg{b}m{}\n", i % 7)).collect();
        lexicons.push((lex.clone(), entries));
        let name = format!("Bg{b}");
        grammars.push((name.clone(), chain_graph(&name, &format!("bg{b}"), &[46, 46, 46], Some(format!("@{lex}")))));
    }
    for c in 0..SCALE_CORES {
        let name = format!("Core{c:02}");
        let extra = c % 5;
        let parallel = (extra > 0).then(|| quoted(&format!("c{c}x"), extra));
        grammars.push((name.clone(), chain_graph(&name, &format!("c{c}"), &[41, 42], parallel)));
    }
    grammars.push(("ReqWh".into(), chain_graph("ReqWh", "wh", &[33, 33], Some(quoted("whx", 20)))));
    grammars.push(("ReqYn".into(), chain_graph("ReqYn", "yn", &[27, 28], Some(quoted("ynx", 10)))));
    let intents = (0..SCALE_CORES)
        .map(|c| IntentSpec {
            label: format!("SCALE-{c:02}"),
            background: Some(format!("Bg{}", c * SCALE_BACKGROUNDS / SCALE_CORES)),
            core: format!("Core{c:02}"),
            requests: vec!["ReqWh".into(), "ReqYn".into()],
            allow_empty_background: true,
            allow_empty_request: true,
        })
        .collect();
    ScaleFixture { grammars, lexicons, intents }
}

impl ScaleFixture {
    pub fn resource_set(&self) -> ResourceSet {
        let gs = self.grammars.iter().map(|(_, s)| parse_grammar(s).expect("fixture grammar parses")).collect();
        let ls = self.lexicons.iter().map(|(n, s)| parse_lexicon(n, s).expect("fixture lexicon parses")).collect();
        ResourceSet::new(gs, ls).expect("fixture resolves")
    }

    /// Writes `grammars/` and `lexicons/` under `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let (g, l) = (dir.join("grammars"), dir.join("lexicons"));
        std::fs::create_dir_all(&g)?;
        std::fs::create_dir_all(&l)?;
        for (name, src) in &self.grammars {
            std::fs::write(g.join(format!("{name}.lgg")), src)?;
        }
        for (name, src) in &self.lexicons {
            std::fs::write(l.join(format!("{name}.lex")), src)?;
        }
        Ok(())
    }
}
