//! Unified-diff parsing.
//!
//! A commit patch is split into hunks, and every hunk body line is tagged by
//! its first character. The two SCG sides are then materialized per hunk:
//! the *added* side keeps context and `+` lines, the *deleted* side keeps
//! context and `-` lines.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineKind {
    Added,
    Deleted,
    Context,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchLine {
    pub kind: LineKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub file_path: String,
    pub lines: Vec<PatchLine>,
}

impl Hunk {
    pub fn count(&self, kind: LineKind) -> usize {
        self.lines.iter().filter(|l| l.kind == kind).count()
    }

    /// Context lines plus lines of `kind`, in patch order. `None` when the
    /// hunk carries no line of `kind`.
    fn fragment(&self, kind: LineKind) -> Option<String> {
        if !self.lines.iter().any(|l| l.kind == kind) {
            return None;
        }
        let kept: Vec<&str> = self
            .lines
            .iter()
            .filter(|l| l.kind == kind || l.kind == LineKind::Context)
            .map(|l| l.text.as_str())
            .collect();
        Some(kept.join("\n"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitPatch {
    pub commit_id: String,
    pub author_timestamp: i64,
    pub hunks: Vec<Hunk>,
}

/// Remaining body-line budget announced by a `@@ -a,b +c,d @@` header.
#[derive(Debug, Clone, Copy)]
struct HunkBudget {
    old: usize,
    new: usize,
}

impl HunkBudget {
    fn exhausted(&self) -> bool {
        self.old == 0 && self.new == 0
    }

    fn consume(&mut self, kind: LineKind) {
        match kind {
            LineKind::Added => self.new = self.new.saturating_sub(1),
            LineKind::Deleted => self.old = self.old.saturating_sub(1),
            LineKind::Context => {
                self.old = self.old.saturating_sub(1);
                self.new = self.new.saturating_sub(1);
            }
        }
    }
}

/// Parses `-a,b +c,d`; a missing count means 1, as in GNU diff output.
fn parse_hunk_header(line: &str) -> Option<HunkBudget> {
    let rest = line.strip_prefix("@@")?;
    let end = rest.find("@@")?;
    let mut old = None;
    let mut new = None;
    for part in rest[..end].split_whitespace() {
        let (sign, range) = part.split_at(1);
        let count = match range.split_once(',') {
            Some((_, n)) => n.parse().ok()?,
            None => {
                range.parse::<u64>().ok()?;
                1
            }
        };
        match sign {
            "-" => old = Some(count),
            "+" => new = Some(count),
            _ => return None,
        }
    }
    Some(HunkBudget {
        old: old?,
        new: new?,
    })
}

fn strip_diff_prefix(path: &str) -> &str {
    let path = path.split('\t').next().unwrap_or(path).trim_end();
    path.strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path)
}

fn classify(line: &str) -> (LineKind, &str) {
    match line.as_bytes().first() {
        Some(b'+') => (LineKind::Added, &line[1..]),
        Some(b'-') => (LineKind::Deleted, &line[1..]),
        Some(b' ') => (LineKind::Context, &line[1..]),
        _ => (LineKind::Context, line),
    }
}

fn is_file_header(line: &str) -> bool {
    line.starts_with("diff ")
        || line.starts_with("index ")
        || line.starts_with("--- ")
        || line.starts_with("+++ ")
        || line == "---"
        || line == "+++"
}

/// Parses raw patch bytes; invalid UTF-8 sequences are replaced.
pub fn parse_patch_bytes(bytes: &[u8], commit_id: &str, timestamp: i64) -> CommitPatch {
    parse_patch(&String::from_utf8_lossy(bytes), commit_id, timestamp)
}

pub fn parse_patch(patch_text: &str, commit_id: &str, timestamp: i64) -> CommitPatch {
    let mut hunks: Vec<Hunk> = Vec::new();
    let mut file_path = String::new();
    let mut old_path = String::new();
    let mut current: Option<(Hunk, Option<HunkBudget>)> = None;

    let flush = |current: &mut Option<(Hunk, Option<HunkBudget>)>, hunks: &mut Vec<Hunk>| {
        if let Some((hunk, _)) = current.take() {
            hunks.push(hunk);
        }
    };

    for raw in patch_text.lines() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if let Some((hunk, budget)) = current.as_mut() {
            // With a valid header the announced counts delimit the body, so
            // a deleted "-- x" line is never mistaken for a file header.
            let in_body = match budget {
                Some(b) => !b.exhausted(),
                None => !(is_file_header(line) || line.starts_with("@@")),
            };
            if in_body {
                if line.starts_with('\\') {
                    continue;
                }
                let (kind, text) = classify(line);
                if let Some(b) = budget.as_mut() {
                    b.consume(kind);
                }
                hunk.lines.push(PatchLine {
                    kind,
                    text: text.to_string(),
                });
                continue;
            }
            if line.starts_with('\\') {
                continue;
            }
            flush(&mut current, &mut hunks);
        }

        if line.starts_with("@@") {
            let path = if file_path.is_empty() || file_path == "/dev/null" {
                old_path.clone()
            } else {
                file_path.clone()
            };
            current = Some((
                Hunk {
                    file_path: path,
                    lines: Vec::new(),
                },
                parse_hunk_header(line),
            ));
        } else if let Some(rest) = line.strip_prefix("diff --git ") {
            let mut parts = rest.split_whitespace();
            old_path = parts.next().map(strip_diff_prefix).unwrap_or("").to_string();
            file_path = parts.next().map(strip_diff_prefix).unwrap_or("").to_string();
        } else if let Some(rest) = line.strip_prefix("--- ") {
            old_path = strip_diff_prefix(rest).to_string();
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            file_path = strip_diff_prefix(rest).to_string();
        }
        // Anything else outside a hunk (mode changes, binary markers, commit
        // message text) carries no source lines.
    }
    flush(&mut current, &mut hunks);

    if hunks.is_empty() && !patch_text.trim().is_empty() {
        log::warn!("commit {commit_id}: no hunk markers found in patch");
    }

    CommitPatch {
        commit_id: commit_id.to_string(),
        author_timestamp: timestamp,
        hunks,
    }
}

/// The per-hunk code fragments of both sides of a commit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitChanges {
    pub added: Vec<String>,
    pub deleted: Vec<String>,
}

pub fn split_changes(patch: &CommitPatch) -> SplitChanges {
    let mut out = SplitChanges::default();
    for hunk in &patch.hunks {
        if let Some(f) = hunk.fragment(LineKind::Added) {
            out.added.push(f);
        }
        if let Some(f) = hunk.fragment(LineKind::Deleted) {
            out.deleted.push(f);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = include_str!("../tests/fixtures/sample_commit.patch");

    fn body(lines: &[&str]) -> String {
        lines.join("\n")
    }

    #[test]
    fn classifies_by_first_character() {
        let text = body(&["@@ -1,3 +1,2 @@", " int a;", "-int b;", "+int c;"]);
        let p = parse_patch(&text, "c1", 0);
        assert_eq!(p.hunks.len(), 1);
        let got: Vec<(LineKind, &str)> = p.hunks[0]
            .lines
            .iter()
            .map(|l| (l.kind, l.text.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                (LineKind::Context, "int a;"),
                (LineKind::Deleted, "int b;"),
                (LineKind::Added, "int c;"),
            ]
        );
    }

    #[test]
    fn empty_patch_has_no_hunks() {
        let p = parse_patch("", "c1", 5);
        assert!(p.hunks.is_empty());
        assert_eq!(p.author_timestamp, 5);
    }

    #[test]
    fn text_without_hunks_is_empty() {
        let p = parse_patch("just a commit message\n", "c1", 0);
        assert!(p.hunks.is_empty());
    }

    #[test]
    fn sample_commit_shape() {
        let p = parse_patch(SAMPLE, "sample", 0);
        assert_eq!(p.hunks.len(), 1);
        let h = &p.hunks[0];
        assert_eq!(h.count(LineKind::Context), 3);
        assert_eq!(h.count(LineKind::Deleted), 3);
        assert_eq!(h.count(LineKind::Added), 1);
        assert!(h.file_path.ends_with("CommandDispatcher.java"));

        let split = split_changes(&p);
        assert_eq!(split.added.len(), 1);
        assert_eq!(split.deleted.len(), 1);
        assert!(split.added[0].contains("throw new CommandException"));
        assert!(!split.added[0].contains("else"));
        assert!(split.deleted[0].contains("else"));
        assert!(split.deleted[0].starts_with(split.added[0].lines().next().unwrap()));
    }

    #[test]
    fn headers_never_become_lines() {
        let text = body(&[
            "diff --git a/x.c b/x.c",
            "index 123..456 100644",
            "--- a/x.c",
            "+++ b/x.c",
            "@@ -1 +1 @@",
            "-a;",
            "+b;",
        ]);
        let p = parse_patch(&text, "c", 0);
        assert_eq!(p.hunks.len(), 1);
        assert_eq!(p.hunks[0].lines.len(), 2);
        assert_eq!(p.hunks[0].file_path, "x.c");
    }

    #[test]
    fn counted_body_keeps_dash_dash_lines() {
        // "--- x" inside the counted body is a deleted "-- x" line.
        let text = body(&["--- a/q.sql", "+++ b/q.sql", "@@ -1,2 +1,1 @@", "--- note", " select 1;"]);
        let p = parse_patch(&text, "c", 0);
        let h = &p.hunks[0];
        assert_eq!(h.count(LineKind::Deleted), 1);
        assert_eq!(h.lines[0].text, "-- note");
        assert_eq!(h.count(LineKind::Context), 1);
    }

    #[test]
    fn trailing_signature_is_not_body() {
        let text = body(&["@@ -1 +1 @@", "-a;", "+b;", "-- ", "2.39.2"]);
        let p = parse_patch(&text, "c", 0);
        assert_eq!(p.hunks[0].lines.len(), 2);
    }

    #[test]
    fn no_newline_marker_dropped() {
        let text = body(&["@@ -1 +1 @@", "-a;", "\\ No newline at end of file", "+b;"]);
        let p = parse_patch(&text, "c", 0);
        assert_eq!(p.hunks[0].lines.len(), 2);
    }

    #[test]
    fn multiple_files_keep_order() {
        let text = body(&[
            "diff --git a/one.c b/one.c",
            "--- a/one.c",
            "+++ b/one.c",
            "@@ -1 +1 @@",
            "-a;",
            "+b;",
            "@@ -10 +10,2 @@",
            " c;",
            "+d;",
            "diff --git a/two.c b/two.c",
            "deleted file mode 100644",
            "--- a/two.c",
            "+++ /dev/null",
            "@@ -1 +0,0 @@",
            "-gone;",
            "diff --git a/img.png b/img.png",
            "Binary files a/img.png and b/img.png differ",
            "diff --git a/run.sh b/run.sh",
            "old mode 100644",
            "new mode 100755",
        ]);
        let p = parse_patch(&text, "c", 0);
        let paths: Vec<&str> = p.hunks.iter().map(|h| h.file_path.as_str()).collect();
        assert_eq!(paths, vec!["one.c", "one.c", "two.c"]);
        let split = split_changes(&p);
        assert_eq!(split.added, vec!["b;".to_string(), "c;\nd;".to_string()]);
        assert_eq!(split.deleted, vec!["a;".to_string(), "gone;".to_string()]);
    }

    #[test]
    fn invalid_utf8_is_replaced() {
        let bytes = b"@@ -1 +1 @@\n-a\xff;\n+b;\n";
        let p = parse_patch_bytes(bytes, "c", 0);
        assert_eq!(p.hunks[0].lines.len(), 2);
        assert!(p.hunks[0].lines[0].text.contains('\u{FFFD}'));
    }

    #[test]
    fn split_direct_filter() {
        let p = parse_patch(&body(&["@@ -1,2 +1,2 @@", " a", "-b", "+c"]), "c", 0);
        let s = split_changes(&p);
        assert_eq!(s.added, vec!["a\nc"]);
        assert_eq!(s.deleted, vec!["a\nb"]);
    }

    #[test]
    fn context_only_hunk_contributes_nothing() {
        let p = parse_patch(&body(&["@@ -1,2 +1,2 @@", " a", " b"]), "c", 0);
        assert_eq!(split_changes(&p), SplitChanges::default());
    }

    fn arb_line() -> impl Strategy<Value = String> {
        (prop::sample::select(vec![' ', '+', '-']), "[a-z;(){} ]{0,12}")
            .prop_map(|(c, t)| format!("{c}{t}"))
    }

    proptest! {
        #[test]
        fn body_lines_conserved(lines in prop::collection::vec(arb_line(), 0..40)) {
            let text = format!("@@ -1,{} +1,{} @@\n{}", lines.len(), lines.len(), lines.join("\n"));
            let p = parse_patch(&text, "c", 0);
            let total: usize = p.hunks.iter().map(|h| h.lines.len()).sum();
            prop_assert_eq!(total, lines.len());
            for h in &p.hunks {
                let n = h.count(LineKind::Added) + h.count(LineKind::Deleted) + h.count(LineKind::Context);
                prop_assert_eq!(n, h.lines.len());
            }
        }

        #[test]
        fn split_is_order_preserving_and_idempotent(lines in prop::collection::vec(arb_line(), 1..40)) {
            let text = format!("@@ -1,{} +1,{} @@\n{}", lines.len(), lines.len(), lines.join("\n"));
            let p = parse_patch(&text, "c", 0);
            let first = split_changes(&p);
            prop_assert_eq!(&first, &split_changes(&p));

            // Re-reading the added fragment as a context+added hunk yields it again.
            let h = &p.hunks[0];
            if h.count(LineKind::Added) > 0 {
                let expected: Vec<&str> = h.lines.iter()
                    .filter(|l| l.kind != LineKind::Deleted)
                    .map(|l| l.text.as_str())
                    .collect();
                prop_assert_eq!(first.added[0].clone(), expected.join("\n"));
            }
        }
    }
}
