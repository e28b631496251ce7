//! Source file filtering and comment removal.

/// True when a file is dropped from the corpus: not `.c`/`.cpp`, any "test" in
/// the path (case-insensitive), or anything under a `third_party` directory.
pub fn is_excluded_path(path: &str) -> bool {
    let lower = path.to_ascii_lowercase();
    let wanted_ext = lower.ends_with(".c") || lower.ends_with(".cpp");
    if !wanted_ext || lower.contains("test") {
        return true;
    }
    lower
        .split(['/', '\\'])
        .rev()
        .skip(1)
        .any(|component| component == "third_party")
}

/// Returns the comment-free source, or `None` when the file is excluded.
pub fn filter_and_clean(path: &str, source: &str) -> Option<String> {
    if is_excluded_path(path) {
        return None;
    }
    Some(strip_comments(source))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Str,
    Char,
}

/// Remove `//` and `/* */` comments while leaving string and character
/// literals intact. Line comments keep their terminating newline; an
/// unterminated block comment runs to end of input.
pub fn strip_comments(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    let mut state = State::Code;
    let mut chars = source.chars().peekable();
    while let Some(c) = chars.next() {
        match state {
            State::Code => match c {
                '/' if chars.peek() == Some(&'/') => {
                    chars.next();
                    state = State::LineComment;
                }
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    state = State::BlockComment;
                }
                '"' => {
                    out.push(c);
                    state = State::Str;
                }
                '\'' => {
                    out.push(c);
                    state = State::Char;
                }
                _ => out.push(c),
            },
            State::LineComment => {
                if c == '\n' {
                    out.push(c);
                    state = State::Code;
                }
            }
            State::BlockComment => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    state = State::Code;
                }
            }
            State::Str | State::Char => {
                out.push(c);
                let close = if state == State::Str { '"' } else { '\'' };
                if c == '\\' {
                    if let Some(escaped) = chars.next() {
                        out.push(escaped);
                    }
                } else if c == close || c == '\n' {
                    // a raw newline ends a broken literal
                    state = State::Code;
                }
            }
        }
    }
    out
}
