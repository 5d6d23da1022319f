//! Maps a JSON pointer back to a line and column in the source text.

/// 1-based `(line, column)` of the value at `pointer`, or of its deepest
/// existing ancestor. Falls back to `(1, 1)` on text that does not scan.
pub fn locate(text: &str, pointer: &str) -> (usize, usize) {
    let target: Vec<String> = pointer
        .split('/')
        .skip(1)
        .map(|s| s.replace("~1", "/").replace("~0", "~"))
        .collect();
    let mut scan = Scanner {
        src: text.as_bytes(),
        pos: 0,
        target: &target,
        best: (0, 0),
    };
    let mut path = Vec::new();
    scan.skip_ws();
    let _ = scan.value(&mut path);
    line_column(text, scan.best.1)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    target: &'a [String],
    /// Depth and offset of the deepest matched prefix so far.
    best: (usize, usize),
}

impl Scanner<'_> {
    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn value(&mut self, path: &mut Vec<String>) -> Option<()> {
        if self.target.starts_with(path) && (path.is_empty() || path.len() > self.best.0) {
            self.best = (path.len(), self.pos);
        }
        match *self.src.get(self.pos)? {
            b'{' => {
                self.pos += 1;
                self.skip_ws();
                if self.src.get(self.pos) == Some(&b'}') {
                    self.pos += 1;
                    return Some(());
                }
                loop {
                    self.skip_ws();
                    let key = self.string()?;
                    self.skip_ws();
                    self.expect(b':')?;
                    self.skip_ws();
                    path.push(key);
                    self.value(path)?;
                    path.pop();
                    self.skip_ws();
                    match *self.src.get(self.pos)? {
                        b',' => self.pos += 1,
                        b'}' => {
                            self.pos += 1;
                            return Some(());
                        }
                        _ => return None,
                    }
                }
            }
            b'[' => {
                self.pos += 1;
                self.skip_ws();
                if self.src.get(self.pos) == Some(&b']') {
                    self.pos += 1;
                    return Some(());
                }
                let mut index = 0usize;
                loop {
                    self.skip_ws();
                    path.push(index.to_string());
                    self.value(path)?;
                    path.pop();
                    index += 1;
                    self.skip_ws();
                    match *self.src.get(self.pos)? {
                        b',' => self.pos += 1,
                        b']' => {
                            self.pos += 1;
                            return Some(());
                        }
                        _ => return None,
                    }
                }
            }
            b'"' => self.string().map(|_| ()),
            _ => {
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| !matches!(b, b',' | b'}' | b']') && !b.is_ascii_whitespace())
                {
                    self.pos += 1;
                }
                Some(())
            }
        }
    }

    fn expect(&mut self, b: u8) -> Option<()> {
        (self.src.get(self.pos) == Some(&b)).then(|| self.pos += 1)
    }

    fn string(&mut self) -> Option<String> {
        self.expect(b'"')?;
        let start = self.pos;
        while *self.src.get(self.pos)? != b'"' {
            if self.src[self.pos] == b'\\' {
                self.pos += 1;
            }
            self.pos += 1;
        }
        let raw = &self.src[start..self.pos];
        self.pos += 1;
        serde_json::from_slice::<String>(&[b"\"", raw, b"\""].concat()).ok()
    }
}
