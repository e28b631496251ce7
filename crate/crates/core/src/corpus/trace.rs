//! Latent-vulnerability tracing: was the code removed by a later fix already
//! present in an earlier release's copy of the file?

use std::collections::HashSet;

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentPresence {
    Present,
    Absent,
    /// The fix deletes or modifies no original line.
    Unverifiable,
}

/// Trim and collapse internal whitespace runs to one space.
fn normalize(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse `@@ -a[,b] +c[,d] @@` into (old count, new count).
fn parse_hunk_header(line: &str, lineno: usize) -> Result<(usize, usize), CorpusError> {
    let bad = || CorpusError::MalformedDiff { line: lineno, message: format!("bad hunk header {line:?}") };
    let rest = line.strip_prefix("@@ ").ok_or_else(bad)?;
    let end = rest.find(" @@").ok_or_else(bad)?;
    let mut ranges = rest[..end].split(' ');
    let count = |r: Option<&str>, sign: char| -> Option<usize> {
        let r = r?.strip_prefix(sign)?;
        let mut parts = r.splitn(2, ',');
        let _start: usize = parts.next()?.parse().ok()?;
        match parts.next() {
            Some(n) => n.parse().ok(),
            None => Some(1),
        }
    };
    let old = count(ranges.next(), '-').ok_or_else(bad)?;
    let new = count(ranges.next(), '+').ok_or_else(bad)?;
    if ranges.next().is_some() {
        return Err(bad());
    }
    Ok((old, new))
}

/// Original lines removed by a unified diff (a modification counts as the
/// deletion of its old version). Blank lines are ignored. A diff without any
/// hunk header is read as one bare hunk.
fn deleted_lines(diff: &str) -> Result<Vec<String>, CorpusError> {
    let bare = !diff.lines().any(|l| l.starts_with("@@"));
    let mut deleted = Vec::new();
    // remaining (old, new) lines of the current hunk
    let mut remaining: Option<(usize, usize)> = None;
    for (i, line) in diff.lines().enumerate() {
        let lineno = i + 1;
        let in_hunk = bare || remaining.is_some();
        if !in_hunk {
            if line.starts_with("@@") {
                remaining = Some(parse_hunk_header(line, lineno)?);
            }
            continue;
        }
        let malformed = |message: String| CorpusError::MalformedDiff { line: lineno, message };
        let (dold, dnew) = match line.chars().next() {
            Some('-') => {
                let norm = normalize(&line[1..]);
                if !norm.is_empty() {
                    deleted.push(norm);
                }
                (1, 0)
            }
            Some('+') => (0, 1),
            Some(' ') | None => (1, 1),
            Some('\\') => (0, 0),
            Some(_) => return Err(malformed(format!("unexpected line {line:?} inside hunk"))),
        };
        if let Some((old, new)) = remaining.as_mut() {
            if *old < dold || *new < dnew {
                return Err(malformed("hunk longer than its header declares".into()));
            }
            *old -= dold;
            *new -= dnew;
            if *old == 0 && *new == 0 {
                remaining = None;
            }
        }
    }
    if remaining.is_some_and(|(old, new)| old + new > 0) {
        return Err(CorpusError::MalformedDiff {
            line: diff.lines().count(),
            message: "diff ends inside a hunk".into(),
        });
    }
    Ok(deleted)
}

/// `Present` iff every line the fix deletes or modifies (whitespace-normalised)
/// occurs in `prior_file`.
pub fn trace_latent_presence(fix_diff: &str, prior_file: &str) -> Result<LatentPresence, CorpusError> {
    let deleted = deleted_lines(fix_diff)?;
    if deleted.is_empty() {
        return Ok(LatentPresence::Unverifiable);
    }
    let prior: HashSet<String> = prior_file.lines().map(normalize).collect();
    Ok(if deleted.iter().all(|l| prior.contains(l)) {
        LatentPresence::Present
    } else {
        LatentPresence::Absent
    })
}
