//! Line-oriented `[section]` / `key = value` text format shared by the
//! materials data file and scenario files.
//!
//! `#` starts a comment. Keys are unique within a section; sections may
//! repeat. Nothing nests below one section level.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

impl KvError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry, KvError> {
        self.get(key)
            .ok_or_else(|| KvError::new(self.line, format!("section [{}] is missing `{}`", self.name, key)))
    }

    pub fn parse<V: FromStr>(&self, key: &str) -> Result<Option<V>, KvError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.parse().map(Some),
        }
    }

    pub fn parse_or<V: FromStr>(&self, key: &str, default: V) -> Result<V, KvError> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Fails on any key not in `known`, so typos surface with a line number.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), KvError> {
        for e in &self.entries {
            if !known.contains(&e.key.as_str()) {
                return Err(KvError::new(
                    e.line,
                    format!("unknown key `{}` in section [{}]", e.key, self.name),
                ));
            }
        }
        Ok(())
    }
}

impl Entry {
    pub fn parse<V: FromStr>(&self) -> Result<V, KvError> {
        self.value.parse().map_err(|_| {
            KvError::new(
                self.line,
                format!("cannot parse `{}` for key `{}`", self.value, self.key),
            )
        })
    }

    pub fn parse_list(&self) -> Result<Vec<f64>, KvError> {
        self.value
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| KvError::new(self.line, format!("cannot parse `{s}` as a number in `{}`", self.key)))
            })
            .collect()
    }

    pub fn parse_bool(&self) -> Result<bool, KvError> {
        match self.value.to_ascii_lowercase().as_str() {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => Err(KvError::new(
                self.line,
                format!("expected on/off for `{}`, got `{}`", self.key, self.value),
            )),
        }
    }
}

pub fn parse(text: &str) -> Result<Vec<Section>, KvError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| KvError::new(line, "unterminated section header"))?
                .trim();
            if name.is_empty() || name.contains(['[', ']', '.']) {
                return Err(KvError::new(line, format!("bad section name `{name}`")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| KvError::new(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(KvError::new(line, "empty key"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| KvError::new(line, "key before any [section] header"))?;
        if section.get(key).is_some() {
            return Err(KvError::new(line, format!("duplicate key `{key}`")));
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "# header\n[pump]\nwavelength_nm = 532 # green\n\n[slab]\nmaterial = fused_silica\nthickness_mm=6\n[slab]\nmaterial = sf10\n";
        let s = parse(text).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].name, "pump");
        assert_eq!(s[0].parse::<f64>("wavelength_nm").unwrap(), Some(532.0));
        assert_eq!(s[1].get("thickness_mm").unwrap().line, 7);
        assert_eq!(s[2].get("material").unwrap().value, "sf10");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse("[a]\nx = 1\nnot a pair\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = parse("x = 1\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse("[a]\nx = 1\nx = 2\n").unwrap_err();
        assert_eq!(err.line, 3);
        let s = parse("[a]\nx = abc\n").unwrap();
        assert_eq!(s[0].parse::<f64>("x").unwrap_err().line, 2);
    }

    #[test]
    fn lists_and_bools() {
        let s = parse("[m]\nc = 1, 2.5, -3e-2\nflag = off\n").unwrap();
        assert_eq!(s[0].get("c").unwrap().parse_list().unwrap(), vec![1.0, 2.5, -0.03]);
        assert!(!s[0].get("flag").unwrap().parse_bool().unwrap());
    }
}
