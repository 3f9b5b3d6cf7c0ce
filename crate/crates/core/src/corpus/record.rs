use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense position of a paper in a [`Corpus`](super::Corpus).
///
/// Papers are stored sorted by `(year, id)`, so comparing two indices compares
/// publication year first and identifier second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PaperIdx(pub u32);

impl PaperIdx {
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PaperIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Author matching key: lowercase first initial and lowercase last name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Author {
    pub initial: char,
    pub last_name: String,
}

impl Author {
    pub fn new(initial: char, last_name: &str) -> Self {
        Author {
            initial: initial.to_lowercase().next().unwrap_or(initial),
            last_name: last_name.trim().to_lowercase(),
        }
    }

    /// Parses `"J.Smith"` or `"John Smith"`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (given, last) = match s.split_once('.') {
            Some((g, l)) => (g.trim(), l.trim()),
            None => s.rsplit_once(char::is_whitespace).map(|(g, l)| (g.trim(), l.trim()))?,
        };
        let initial = given.chars().next()?;
        if last.is_empty() || !initial.is_alphanumeric() {
            return None;
        }
        Some(Author::new(initial, last))
    }
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut initial = self.initial.to_uppercase();
        let last: String = {
            let mut c = self.last_name.chars();
            match c.next() {
                Some(first) => first.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        };
        write!(f, "{}.{}", initial.next().unwrap_or(self.initial), last)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PubType {
    Article,
    Letter,
    Review,
    Editorial,
    Other,
}

impl PubType {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "article" => PubType::Article,
            "letter" => PubType::Letter,
            "review" => PubType::Review,
            "editorial" => PubType::Editorial,
            _ => PubType::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PubType::Article => "article",
            PubType::Letter => "letter",
            PubType::Review => "review",
            PubType::Editorial => "editorial",
            PubType::Other => "other",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            PubType::Article => 0,
            PubType::Letter => 1,
            PubType::Review => 2,
            PubType::Editorial => 3,
            PubType::Other => 4,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => PubType::Article,
            1 => PubType::Letter,
            2 => PubType::Review,
            3 => PubType::Editorial,
            4 => PubType::Other,
            _ => return None,
        })
    }

    /// Research outputs that may serve as focal papers.
    pub fn is_research(self) -> bool {
        matches!(self, PubType::Article | PubType::Letter)
    }
}

pub const UNKNOWN_FIELD: &str = "unknown";

/// One publication as given in the input file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaperRecord {
    pub id: String,
    pub year: i32,
    pub field: String,
    pub venue: Option<String>,
    pub pub_type: PubType,
    pub authors: Vec<Author>,
    /// Explicit team size, used when the author list is absent.
    pub team_size: Option<u32>,
    /// References exactly as listed, possibly dangling.
    pub references: Vec<String>,
}

impl PaperRecord {
    pub fn new(id: impl Into<String>, year: i32) -> Self {
        PaperRecord {
            id: id.into(),
            year,
            field: UNKNOWN_FIELD.to_string(),
            venue: None,
            pub_type: PubType::Article,
            authors: Vec::new(),
            team_size: None,
            references: Vec::new(),
        }
    }

    pub fn with_refs<I, S>(mut self, refs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.references = refs.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = field.into();
        self
    }

    pub fn with_type(mut self, pub_type: PubType) -> Self {
        self.pub_type = pub_type;
        self
    }

    pub fn with_authors(mut self, authors: &[&str]) -> Self {
        self.authors = authors.iter().filter_map(|a| Author::parse(a)).collect();
        self
    }

    /// Team size `M`: the author count when authors are listed.
    pub fn team_size(&self) -> Option<u32> {
        if self.authors.is_empty() {
            self.team_size.filter(|&m| m > 0)
        } else {
            Some(self.authors.len() as u32)
        }
    }

    pub fn has_known_field(&self) -> bool {
        !self.field.is_empty() && self.field != UNKNOWN_FIELD
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn author_parsing_normalizes_case() {
        let a = Author::parse("J.Smith").unwrap();
        assert_eq!(a, Author::new('j', "smith"));
        assert_eq!(Author::parse("John  SMITH").unwrap(), a);
        assert_eq!(a.to_string(), "J.Smith");
        assert!(Author::parse("Smith").is_none());
        assert!(Author::parse(".Smith").is_none());
    }

    #[test]
    fn team_size_prefers_author_count() {
        let p = PaperRecord::new("a", 2000).with_authors(&["A.One", "B.Two"]);
        assert_eq!(p.team_size(), Some(2));
        let mut q = PaperRecord::new("b", 2000);
        assert_eq!(q.team_size(), None);
        q.team_size = Some(4);
        assert_eq!(q.team_size(), Some(4));
    }

    #[test]
    fn pub_type_research_filter() {
        assert!(PubType::parse("Article").is_research());
        assert!(PubType::parse("letter").is_research());
        assert!(!PubType::parse("review").is_research());
        assert_eq!(PubType::parse("news"), PubType::Other);
    }
}
