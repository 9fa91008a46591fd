//! Rule-based extraction. Each pilot turn updates the fields it mentions;
//! the spec is assembled from the latest value of each field.

use std::sync::LazyLock;

use regex::{Captures, Regex};

use super::{
    Constraints, Conversation, MissionSpec, ParseOutcome, Patrol, PlaceRef, PoiRequirement,
    Preference, RangeClass,
};

fn re(pattern: &str) -> Regex {
    Regex::new(&format!("(?i){pattern}")).expect("static pattern")
}

const NUM: &str = r"(?P<n>\d+(?:\.\d+)?)";
const ARTICLE: &str = r"(?:a|an|the|one|some)";

static CLAUSE_END: LazyLock<Regex> = LazyLock::new(|| re(r"[.;!?](?:\s+|$)|\n"));
static PLACE_STOP: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\s+(?:with|via|and|stopping|stop|visiting|visit|then|while|before|within|arriving|arrive|using|for|but|making|picking|so|instead|please|in\s+under)\b|,",
    )
});
static FROM_TO: LazyLock<Regex> = LazyLock::new(|| re(r"\bfrom\s+(?P<from>.+?)\s+to\s+(?P<to>.+)"));
static START_AT: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\b(?:take\s*off|taking\s+off|depart(?:ing)?|leav(?:e|ing)|start(?:ing)?)\s+(?:from|at)\s+(?P<p>.+)",
    )
});
static END_AT: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\b(?:land(?:ing)?|arriv(?:e|ing)|end(?:ing)?|finish(?:ing)?|return(?:ing)?)\s+(?:at|in|to)\s+(?P<p>.+)",
    )
});
static GO_TO: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:fly|go|head|travel|relocate|ferry)\s+(?:over\s+)?to\s+(?P<p>.+)"));
static PATROL: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\b(?:check|patrol|survey|inspect|monitor|surveil\w*|scan|observe)\s+(?:on\s+)?(?:all\s+)?(?:of\s+)?(?:the\s+)?(?P<cat>[a-z]+)",
    )
});
static NEAR: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:near|around|close\s+to|surrounding)\s+(?P<p>.+)"));
static RADIUS: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"\b(?:within(?:\s+a)?|radius\s+(?:of\s+)?|range\s+of)\s+{NUM}\s*(?P<u>km|kilomet(?:er|re)s?|m|met(?:er|re)s?|mi|miles?)\b"
    ))
});
static RADIUS_SUFFIX: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"\b{NUM}\s*(?P<u>km|kilomet(?:er|re)s?|m|met(?:er|re)s?|mi|miles?)\s+radius\b"
    ))
});
static FLEET: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\b(?P<n>\d+|one|two|three|four|five|six|seven|eight|nine|ten|twelve|single)\s+(?:uavs?|drones?|aircraft|planes?|vehicles?)\b",
    )
});
static FLEET_OF: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\bfleet\s+of\s+(?P<n>\d+|one|two|three|four|five|six|seven|eight|nine|ten|twelve)\b")
});
static VISIT: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"\b(?:visit(?:ing)?|stop(?:ping)?\s+(?:at|by)|deliver(?:ing)?\s+to|drop(?:ping)?\s+(?:off\s+)?at|pick(?:ing)?\s+up\s+(?:from|at)|go(?:ing)?\s+(?:by|to))\s+(?P<list>{ARTICLE}\s+[a-z]+(?:\s*(?:,\s*and|,|and)\s*{ARTICLE}\s+[a-z]+)*)"
    ))
});
static LIST_ITEM: LazyLock<Regex> =
    LazyLock::new(|| re(&format!(r"\b{ARTICLE}\s+(?P<cat>[a-z]+)")));
static REMOVE: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\b(?:skip|remove|cancel|forget|no\s+longer\s+visit|don'?t\s+visit|do\s+not\s+visit)\s+(?:the\s+|a\s+|an\s+)?(?P<cat>[a-z]+)",
    )
});
static PREFERENCE: LazyLock<Regex> = LazyLock::new(|| {
    re(
        r"\b(?P<p>cheapest|cheaper|lowest[- ]cost|least\s+expensive|fastest|quickest|faster|shortest|shorter|balanced)\b",
    )
});
static RANGE: LazyLock<Regex> = LazyLock::new(|| re(r"\b(?P<r>short|medium|long)[- ]range\b"));
static DURATION: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"\b(?:within|in\s+under|under|in\s+less\s+than|less\s+than|at\s+most|no\s+more\s+than)\s+{NUM}\s*(?P<u>hours?|hrs?|h|minutes?|mins?)\b"
    ))
});
static MAX_LEG: LazyLock<Regex> = LazyLock::new(|| {
    re(&format!(
        r"\blegs?\s+(?:of\s+)?(?:under|below|at\s+most|no\s+(?:longer|more)\s+than|shorter\s+than|up\s+to|max(?:imum)?(?:\s+of)?)\s+{NUM}\s*(?P<u>km|kilomet(?:er|re)s?|mi|miles?)\b"
    ))
});
static RESET: LazyLock<Regex> =
    LazyLock::new(|| re(r"\b(?:start\s+over|reset\s+(?:the\s+)?mission|new\s+mission)\b"));

#[derive(Debug, Default, Clone)]
struct State {
    start: Option<String>,
    end: Option<String>,
    patrol_target: Option<String>,
    patrol_center: Option<String>,
    patrol_radius: Option<f64>,
    pois: Vec<String>,
    fleet: Option<u32>,
    preference: Option<Preference>,
    range: Option<RangeClass>,
    max_duration_s: Option<f64>,
    max_leg_km: Option<f64>,
}

fn number_word(s: &str) -> Option<u32> {
    let words = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    let lower = s.to_lowercase();
    if lower == "single" {
        return Some(1);
    }
    if lower == "twelve" {
        return Some(12);
    }
    words
        .iter()
        .position(|w| *w == lower)
        .map(|i| i as u32)
        .or_else(|| lower.parse().ok())
}

/// Plural category word to its singular tag.
pub(crate) fn singular(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() > 1 {
            return format!("{stem}y");
        }
    }
    for suffix in ["ches", "shes", "xes", "sses"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    if w.ends_with('s') && !w.ends_with("ss") && w.len() > 3 {
        return w[..w.len() - 1].to_string();
    }
    w
}

fn clean_place(raw: &str) -> Option<String> {
    let cut = PLACE_STOP.find(raw).map_or(raw, |m| &raw[..m.start()]);
    let mut s = cut
        .trim()
        .trim_end_matches(|c: char| !c.is_alphanumeric() && c != ')');
    for article in ["the ", "The ", "THE "] {
        if let Some(rest) = s.strip_prefix(article) {
            s = rest;
        }
    }
    let s = s.trim();
    (!s.is_empty() && !s.starts_with(|c: char| c.is_ascii_digit())).then(|| s.to_string())
}

fn meters(n: f64, unit: &str) -> f64 {
    let u = unit.to_lowercase();
    if u.starts_with("mi") {
        n * 1609.344
    } else if u == "m" || u.starts_with("met") {
        n
    } else {
        n * 1000.0
    }
}

fn num(c: &Captures<'_>) -> Option<f64> {
    c.name("n")?.as_str().parse().ok()
}

fn apply_clause(state: &mut State, clause: &str) {
    if RESET.is_match(clause) {
        *state = State::default();
        return;
    }
    if let Some(c) = FROM_TO.captures(clause) {
        if let Some(from) = clean_place(&c["from"]) {
            state.start = Some(from);
        }
        if let Some(to) = clean_place(&c["to"]) {
            state.end = Some(to);
        }
    } else if let Some(c) = GO_TO.captures(clause) {
        if let Some(p) = clean_place(&c["p"]) {
            state.end = Some(p);
        }
    }
    if let Some(c) = START_AT.captures(clause) {
        if let Some(p) = clean_place(&c["p"]) {
            state.start = Some(p);
        }
    }
    if let Some(c) = END_AT.captures(clause) {
        if let Some(p) = clean_place(&c["p"]) {
            state.end = Some(p);
        }
    }
    if let Some(c) = PATROL.captures(clause) {
        state.patrol_target = Some(singular(&c["cat"]));
    }
    if let Some(c) = NEAR.captures(clause) {
        if let Some(p) = clean_place(&c["p"]) {
            state.patrol_center = Some(p);
        }
    }
    for c in RADIUS
        .captures_iter(clause)
        .chain(RADIUS_SUFFIX.captures_iter(clause))
    {
        if let Some(n) = num(&c) {
            state.patrol_radius = Some(meters(n, &c["u"]));
        }
    }
    if let Some(c) = FLEET.captures(clause).or_else(|| FLEET_OF.captures(clause)) {
        if let Some(n) = number_word(&c["n"]).filter(|n| *n >= 1) {
            state.fleet = Some(n);
        }
    }
    for c in VISIT.captures_iter(clause) {
        for item in LIST_ITEM.captures_iter(&c["list"]) {
            let cat = singular(&item["cat"]);
            if !state.pois.contains(&cat) {
                state.pois.push(cat);
            }
        }
    }
    for c in REMOVE.captures_iter(clause) {
        let cat = singular(&c["cat"]);
        if cat == "patrol" || Some(&cat) == state.patrol_target.as_ref() {
            state.patrol_target = None;
            state.patrol_center = None;
            state.patrol_radius = None;
        }
        state.pois.retain(|p| *p != cat);
    }
    if let Some(c) = PREFERENCE.captures_iter(clause).last() {
        let p = c["p"].to_lowercase();
        state.preference = Some(
            if p.starts_with("chea") || p.starts_with("low") || p.starts_with("least") {
                Preference::Cheapest
            } else if p.starts_with("fast") || p.starts_with("quick") {
                Preference::Fastest
            } else if p.starts_with("short") {
                Preference::Shortest
            } else {
                Preference::Balanced
            },
        );
    }
    if let Some(c) = RANGE.captures(clause) {
        state.range = match c["r"].to_lowercase().as_str() {
            "short" => Some(RangeClass::Short),
            "medium" => Some(RangeClass::Medium),
            _ => Some(RangeClass::Long),
        };
    }
    if let Some(c) = DURATION.captures(clause) {
        if let Some(n) = num(&c) {
            let unit = c["u"].to_lowercase();
            state.max_duration_s = Some(if unit.starts_with('h') {
                n * 3600.0
            } else {
                n * 60.0
            });
        }
    }
    if let Some(c) = MAX_LEG.captures(clause) {
        if let Some(n) = num(&c) {
            state.max_leg_km = Some(meters(n, &c["u"]) / 1000.0);
        }
    }
}

fn clauses(text: &str) -> impl Iterator<Item = &str> {
    CLAUSE_END
        .split(text)
        .map(str::trim)
        .filter(|c| !c.is_empty())
}

fn build(state: State) -> MissionSpec {
    let patrol = state.patrol_target.map(|target| Patrol {
        center_ref: PlaceRef::new(state.patrol_center.unwrap_or_default()),
        radius_m: state.patrol_radius.unwrap_or(0.0),
        target,
    });
    let range_class = state
        .range
        .or_else(|| patrol.as_ref().map(|_| RangeClass::Short));
    MissionSpec {
        range_class,
        start_ref: state.start.map(PlaceRef::new),
        end_ref: state.end.map(PlaceRef::new),
        poi_requirements: state
            .pois
            .into_iter()
            .map(|category| PoiRequirement { category, count: 1 })
            .collect(),
        patrol,
        fleet_size: state.fleet.unwrap_or(1),
        preference: state.preference.unwrap_or_default(),
        constraints: Constraints {
            max_duration_s: state.max_duration_s,
            max_leg_km: state.max_leg_km,
            ..Default::default()
        },
    }
}

/// Extracts a mission from every pilot turn, later turns overriding
/// earlier ones. System turns are ignored.
pub fn parse_conversation(conv: &Conversation) -> ParseOutcome {
    let mut state = State::default();
    for turn in conv.pilot_turns() {
        for clause in clauses(turn) {
            apply_clause(&mut state, clause);
        }
    }
    ParseOutcome::from_spec(build(state))
}
