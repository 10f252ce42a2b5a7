use std::fmt::Display;

/// Ordered `key=value` lines. Values never contain newlines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        let value = value.to_string().replace(['\n', '\r'], " ");
        self.entries.push((key.into(), value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Report {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Report { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_parse_agree() {
        let mut r = Report::new();
        r.put("status", "Converged");
        r.put("residual", 1.5e-5);
        r.put("cause", "two\nlines");
        let text = r.render();
        assert_eq!(
            text,
            "status=Converged\nresidual=0.000015\ncause=two lines\n"
        );
        assert_eq!(Report::parse(&text), r);
        assert_eq!(r.get("residual"), Some("0.000015"));
        assert_eq!(r.get("missing"), None);
    }
}
