//! Effective lines of code.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Language {
    Java,
    Other,
}

impl Language {
    pub fn from_path(path: &str) -> Self {
        if path.ends_with(".java") {
            Language::Java
        } else {
            Language::Other
        }
    }
}

/// Line count the way git counts it: a trailing fragment without a newline
/// is still a line.
pub fn count_lines(content: &[u8]) -> u64 {
    let newlines = content.iter().filter(|&&b| b == b'\n').count() as u64;
    match content.last() {
        Some(b'\n') | None => newlines,
        Some(_) => newlines + 1,
    }
}

/// Counts lines that are neither blank nor comment-only.
///
/// For Java, `//` and `/* ... */` comments are recognised, including block
/// comments spanning lines. Comment markers inside string or char literals are
/// ignored only when the literal closes on the same line.
pub fn count_effective_loc(content: &str, language: Language) -> usize {
    match language {
        Language::Other => content.lines().filter(|l| !l.trim().is_empty()).count(),
        Language::Java => {
            let mut in_block = false;
            content
                .lines()
                .filter(|line| java_line_has_code(line, &mut in_block))
                .count()
        }
    }
}

fn java_line_has_code(line: &str, in_block: &mut bool) -> bool {
    let bytes = line.as_bytes();
    let mut code = false;
    let mut i = 0;
    while i < bytes.len() {
        if *in_block {
            if bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/') {
                *in_block = false;
                i += 2;
            } else {
                i += 1;
            }
            continue;
        }
        match bytes[i] {
            b'/' if bytes.get(i + 1) == Some(&b'/') => break,
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                *in_block = true;
                i += 2;
            }
            q @ (b'"' | b'\'') => {
                code = true;
                i = match closing_quote(bytes, i + 1, q) {
                    Some(end) => end + 1,
                    // unterminated on this line: treat the quote as plain code
                    None => i + 1,
                };
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                code = true;
                i += 1;
            }
        }
    }
    code
}

fn closing_quote(bytes: &[u8], mut i: usize, quote: u8) -> Option<usize> {
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b if b == quote => return Some(i),
            _ => i += 1,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        assert_eq!(count_effective_loc("", Language::Java), 0);
        assert_eq!(count_effective_loc("", Language::Other), 0);
    }

    #[test]
    fn comments_are_excluded() {
        let src = "int a;\n// c\n/*\nb\n*/\nint d;";
        assert_eq!(count_effective_loc(src, Language::Java), 2);
        // only blanks are excluded for other languages
        assert_eq!(count_effective_loc(src, Language::Other), 6);
    }

    #[test]
    fn code_around_block_comments_counts() {
        let src = "int a; /* start\n still comment */ int b;\n/* x */\n   \n/** doc */ void f() {}\n";
        assert_eq!(count_effective_loc(src, Language::Java), 3);
    }

    #[test]
    fn markers_inside_strings() {
        assert_eq!(count_effective_loc("String s = \"// not a comment\";", Language::Java), 1);
        // a string that closes on the line hides the block opener
        let src = "String s = \"/*\";\nint x;\n";
        assert_eq!(count_effective_loc(src, Language::Java), 2);
        assert_eq!(count_effective_loc("char c = '\"'; // q\nint y;", Language::Java), 2);
        assert_eq!(count_effective_loc("String e = \"a\\\"b /* c\";\nint z;", Language::Java), 2);
    }

    #[test]
    fn git_line_counting() {
        assert_eq!(count_lines(b""), 0);
        assert_eq!(count_lines(b"a\n"), 1);
        assert_eq!(count_lines(b"a\nb"), 2);
        assert_eq!(count_lines(b"\n\n"), 2);
    }
}
