//! Three-valued verdicts.

use serde::Serialize;

/// Outcome of a decision procedure. `Yes` carries a witness; `No` is only
/// produced from a complete argument.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Decision<W> {
    Yes(W),
    No,
    Unknown(String),
}

/// Kleene truth values.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn or(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::Yes, _) | (_, Tri::Yes) => Tri::Yes,
            (Tri::No, Tri::No) => Tri::No,
            _ => Tri::Unknown,
        }
    }

    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            _ => Tri::Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Tri {
        match self {
            Tri::Yes => Tri::No,
            Tri::No => Tri::Yes,
            Tri::Unknown => Tri::Unknown,
        }
    }

    pub fn is_definite(self) -> bool {
        self != Tri::Unknown
    }
}

impl<W> Decision<W> {
    pub fn tri(&self) -> Tri {
        match self {
            Decision::Yes(_) => Tri::Yes,
            Decision::No => Tri::No,
            Decision::Unknown(_) => Tri::Unknown,
        }
    }

    pub fn is_yes(&self) -> bool {
        matches!(self, Decision::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Decision::No)
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Decision::Unknown(_))
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Decision::Yes(w) => Some(w),
            _ => None,
        }
    }

    pub fn map<V, F: FnOnce(W) -> V>(self, f: F) -> Decision<V> {
        match self {
            Decision::Yes(w) => Decision::Yes(f(w)),
            Decision::No => Decision::No,
            Decision::Unknown(r) => Decision::Unknown(r),
        }
    }

    /// Kleene disjunction keeping the first witness.
    pub fn or_else<F: FnOnce() -> Decision<W>>(self, f: F) -> Decision<W> {
        match self {
            Decision::Yes(w) => Decision::Yes(w),
            Decision::No => f(),
            Decision::Unknown(r) => match f() {
                Decision::Yes(w) => Decision::Yes(w),
                Decision::No => Decision::Unknown(r),
                Decision::Unknown(r2) => Decision::Unknown(format!("{r}; {r2}")),
            },
        }
    }
}
