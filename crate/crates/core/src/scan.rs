//! Regeneration of the SCAN command set from its phrase-structure grammar
//! and the compositional interpreter mapping commands to action sequences.
//!
//! Grammar:
//! ```text
//! C   -> S | S and S | S after S
//! S   -> V | V twice | V thrice
//! V   -> U | turn Dir | U Dir | turn opposite Dir | U opposite Dir
//!        | turn around Dir | U around Dir
//! U   -> walk | look | run | jump
//! Dir -> left | right
//! ```

use crate::error::ParseError;
use crate::token::{seq, Sample, Token};

pub const SOURCE_VOCAB: [&str; 13] = [
    "walk", "look", "run", "jump", "turn", "left", "right", "opposite", "around", "twice",
    "thrice", "and", "after",
];

pub const ACTION_VOCAB: [&str; 6] = ["WALK", "LOOK", "RUN", "JUMP", "LTURN", "RTURN"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Walk,
    Look,
    Run,
    Jump,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Walk, Action::Look, Action::Run, Action::Jump];

    fn word(self) -> &'static str {
        match self {
            Action::Walk => "walk",
            Action::Look => "look",
            Action::Run => "run",
            Action::Jump => "jump",
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Action::Walk => "WALK",
            Action::Look => "LOOK",
            Action::Run => "RUN",
            Action::Jump => "JUMP",
        }
    }

    fn from_word(w: &str) -> Option<Self> {
        Action::ALL.into_iter().find(|a| a.word() == w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Left, Direction::Right];

    fn word(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    fn turn_symbol(self) -> &'static str {
        match self {
            Direction::Left => "LTURN",
            Direction::Right => "RTURN",
        }
    }

    fn from_word(w: &str) -> Option<Self> {
        Direction::ALL.into_iter().find(|d| d.word() == w)
    }
}

/// A clause-level verb phrase (the grammar's V forms).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbPhrase {
    Bare(Action),
    Turn(Direction),
    ActionDir(Action, Direction),
    TurnOpposite(Direction),
    ActionOpposite(Action, Direction),
    TurnAround(Direction),
    ActionAround(Action, Direction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repeat {
    None,
    Twice,
    Thrice,
}

impl Repeat {
    pub const ALL: [Repeat; 3] = [Repeat::None, Repeat::Twice, Repeat::Thrice];

    fn times(self) -> usize {
        match self {
            Repeat::None => 1,
            Repeat::Twice => 2,
            Repeat::Thrice => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clause {
    pub verb: VerbPhrase,
    pub repeat: Repeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandAst {
    Single(Clause),
    And(Clause, Clause),
    After(Clause, Clause),
}

/// All 34 verb-phrase forms in a fixed order.
pub fn all_verb_phrases() -> Vec<VerbPhrase> {
    let mut out = Vec::with_capacity(34);
    for a in Action::ALL {
        out.push(VerbPhrase::Bare(a));
    }
    for d in Direction::ALL {
        out.push(VerbPhrase::Turn(d));
    }
    for a in Action::ALL {
        for d in Direction::ALL {
            out.push(VerbPhrase::ActionDir(a, d));
        }
    }
    for d in Direction::ALL {
        out.push(VerbPhrase::TurnOpposite(d));
    }
    for a in Action::ALL {
        for d in Direction::ALL {
            out.push(VerbPhrase::ActionOpposite(a, d));
        }
    }
    for d in Direction::ALL {
        out.push(VerbPhrase::TurnAround(d));
    }
    for a in Action::ALL {
        for d in Direction::ALL {
            out.push(VerbPhrase::ActionAround(a, d));
        }
    }
    out
}

/// All 102 clause forms (34 verb phrases x 3 repetitions).
pub fn all_clauses() -> Vec<Clause> {
    let mut out = Vec::with_capacity(102);
    for verb in all_verb_phrases() {
        for repeat in Repeat::ALL {
            out.push(Clause { verb, repeat });
        }
    }
    out
}

fn render_verb(v: VerbPhrase, out: &mut Vec<Token>) {
    let mut push = |w: &str| out.push(Token::new(w).unwrap());
    match v {
        VerbPhrase::Bare(a) => push(a.word()),
        VerbPhrase::Turn(d) => {
            push("turn");
            push(d.word());
        }
        VerbPhrase::ActionDir(a, d) => {
            push(a.word());
            push(d.word());
        }
        VerbPhrase::TurnOpposite(d) => {
            push("turn");
            push("opposite");
            push(d.word());
        }
        VerbPhrase::ActionOpposite(a, d) => {
            push(a.word());
            push("opposite");
            push(d.word());
        }
        VerbPhrase::TurnAround(d) => {
            push("turn");
            push("around");
            push(d.word());
        }
        VerbPhrase::ActionAround(a, d) => {
            push(a.word());
            push("around");
            push(d.word());
        }
    }
}

fn render_clause(c: Clause, out: &mut Vec<Token>) {
    render_verb(c.verb, out);
    match c.repeat {
        Repeat::None => {}
        Repeat::Twice => out.push(Token::new("twice").unwrap()),
        Repeat::Thrice => out.push(Token::new("thrice").unwrap()),
    }
}

/// Renders an ast back to its unique surface form.
pub fn render_command(ast: &CommandAst) -> Vec<Token> {
    let mut out = Vec::new();
    match ast {
        CommandAst::Single(c) => render_clause(*c, &mut out),
        CommandAst::And(a, b) => {
            render_clause(*a, &mut out);
            out.push(Token::new("and").unwrap());
            render_clause(*b, &mut out);
        }
        CommandAst::After(a, b) => {
            render_clause(*a, &mut out);
            out.push(Token::new("after").unwrap());
            render_clause(*b, &mut out);
        }
    }
    out
}

fn interpret_verb(v: VerbPhrase, out: &mut Vec<Token>) {
    let mut push = |w: &str| out.push(Token::new(w).unwrap());
    match v {
        VerbPhrase::Bare(a) => push(a.symbol()),
        VerbPhrase::Turn(d) => push(d.turn_symbol()),
        VerbPhrase::ActionDir(a, d) => {
            push(d.turn_symbol());
            push(a.symbol());
        }
        VerbPhrase::TurnOpposite(d) => {
            push(d.turn_symbol());
            push(d.turn_symbol());
        }
        VerbPhrase::ActionOpposite(a, d) => {
            push(d.turn_symbol());
            push(d.turn_symbol());
            push(a.symbol());
        }
        VerbPhrase::TurnAround(d) => {
            for _ in 0..4 {
                push(d.turn_symbol());
            }
        }
        VerbPhrase::ActionAround(a, d) => {
            for _ in 0..4 {
                push(d.turn_symbol());
                push(a.symbol());
            }
        }
    }
}

fn interpret_clause(c: Clause, out: &mut Vec<Token>) {
    let mut unit = Vec::new();
    interpret_verb(c.verb, &mut unit);
    for _ in 0..c.repeat.times() {
        out.extend(unit.iter().cloned());
    }
}

/// Maps a command ast to its action sequence. `and` concatenates in order,
/// `after` swaps the order, `twice`/`thrice` repeat the clause.
pub fn interpret(ast: &CommandAst) -> Vec<Token> {
    let mut out = Vec::new();
    match ast {
        CommandAst::Single(c) => interpret_clause(*c, &mut out),
        CommandAst::And(a, b) => {
            interpret_clause(*a, &mut out);
            interpret_clause(*b, &mut out);
        }
        CommandAst::After(a, b) => {
            interpret_clause(*b, &mut out);
            interpret_clause(*a, &mut out);
        }
    }
    out
}

/// Every derivation of the grammar, paired with its interpretation,
/// deduplicated and sorted lexicographically by source tokens.
pub fn enumerate_commands() -> Vec<Sample> {
    let clauses = all_clauses();
    let mut asts = Vec::with_capacity(102 + 2 * 102 * 102);
    for &c in &clauses {
        asts.push(CommandAst::Single(c));
    }
    for &a in &clauses {
        for &b in &clauses {
            asts.push(CommandAst::And(a, b));
            asts.push(CommandAst::After(a, b));
        }
    }
    let mut samples: Vec<Sample> = asts
        .iter()
        .map(|ast| Sample::new(render_command(ast), interpret(ast)))
        .collect();
    samples.sort();
    samples.dedup();
    samples
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(Token::as_str)
    }

    fn bump(&mut self) -> Option<&'a str> {
        let t = self.tokens.get(self.pos).map(Token::as_str);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn fail(&self) -> ParseError {
        match self.tokens.get(self.pos) {
            Some(t) => ParseError::Unexpected {
                position: self.pos,
                token: t.as_str().to_string(),
            },
            None => ParseError::Eof { position: self.pos },
        }
    }
}

fn parse_verb(cur: &mut Cursor) -> Result<VerbPhrase, ParseError> {
    match cur.peek() {
        Some("turn") => {
            cur.bump();
            match cur.peek() {
                Some("opposite") => {
                    cur.bump();
                    let d = parse_dir(cur)?;
                    Ok(VerbPhrase::TurnOpposite(d))
                }
                Some("around") => {
                    cur.bump();
                    let d = parse_dir(cur)?;
                    Ok(VerbPhrase::TurnAround(d))
                }
                _ => {
                    let d = parse_dir(cur)?;
                    Ok(VerbPhrase::Turn(d))
                }
            }
        }
        Some(w) => match Action::from_word(w) {
            Some(a) => {
                cur.bump();
                match cur.peek() {
                    Some("opposite") => {
                        cur.bump();
                        let d = parse_dir(cur)?;
                        Ok(VerbPhrase::ActionOpposite(a, d))
                    }
                    Some("around") => {
                        cur.bump();
                        let d = parse_dir(cur)?;
                        Ok(VerbPhrase::ActionAround(a, d))
                    }
                    Some(w2) if Direction::from_word(w2).is_some() => {
                        let d = parse_dir(cur)?;
                        Ok(VerbPhrase::ActionDir(a, d))
                    }
                    _ => Ok(VerbPhrase::Bare(a)),
                }
            }
            None => Err(cur.fail()),
        },
        None => Err(cur.fail()),
    }
}

fn parse_dir(cur: &mut Cursor) -> Result<Direction, ParseError> {
    match cur.peek().and_then(Direction::from_word) {
        Some(d) => {
            cur.bump();
            Ok(d)
        }
        None => Err(cur.fail()),
    }
}

fn parse_clause(cur: &mut Cursor) -> Result<Clause, ParseError> {
    let verb = parse_verb(cur)?;
    let repeat = match cur.peek() {
        Some("twice") => {
            cur.bump();
            Repeat::Twice
        }
        Some("thrice") => {
            cur.bump();
            Repeat::Thrice
        }
        _ => Repeat::None,
    };
    Ok(Clause { verb, repeat })
}

/// Parses a command; the grammar is unambiguous so the derivation is unique.
pub fn parse(tokens: &[Token]) -> Result<CommandAst, ParseError> {
    let mut cur = Cursor { tokens, pos: 0 };
    let first = parse_clause(&mut cur)?;
    let ast = match cur.peek() {
        Some("and") => {
            cur.bump();
            let second = parse_clause(&mut cur)?;
            CommandAst::And(first, second)
        }
        Some("after") => {
            cur.bump();
            let second = parse_clause(&mut cur)?;
            CommandAst::After(first, second)
        }
        _ => CommandAst::Single(first),
    };
    if cur.pos != tokens.len() {
        return Err(cur.fail());
    }
    Ok(ast)
}

/// Convenience: interpret a source string directly.
pub fn interpret_text(source: &str) -> Result<Vec<Token>, ParseError> {
    Ok(interpret(&parse(&seq(source))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::render;
    use proptest::prelude::*;

    #[test]
    fn verb_and_clause_counts() {
        assert_eq!(all_verb_phrases().len(), 34);
        assert_eq!(all_clauses().len(), 102);
    }

    #[test]
    fn command_count_matches_quadratic_identity() {
        let commands = enumerate_commands();
        // 102 single-clause + 2 conjunctions * 102^2 two-clause forms.
        assert_eq!(commands.len(), 102 + 2 * 102 * 102);
        assert_eq!(commands.len(), 20910);
    }

    #[test]
    fn sources_are_distinct_and_sorted() {
        let commands = enumerate_commands();
        for w in commands.windows(2) {
            assert!(w[0].source < w[1].source);
        }
    }

    #[test]
    fn known_pairs_present() {
        let commands = enumerate_commands();
        let jump_twice = Sample::from_text("jump twice", "JUMP JUMP");
        assert!(commands.contains(&jump_twice));
        assert_eq!(render(&interpret_text("turn left").unwrap()), "LTURN");
        assert_eq!(
            render(&interpret_text("jump opposite right").unwrap()),
            "RTURN RTURN JUMP"
        );
    }

    #[test]
    fn hand_derived_after_example() {
        // walk around left thrice after run:
        // [run] then (LTURN WALK)*4 three times.
        let mut expect = vec!["RUN".to_string()];
        for _ in 0..12 {
            expect.push("LTURN".into());
            expect.push("WALK".into());
        }
        let got: Vec<String> = interpret_text("walk around left thrice after run")
            .unwrap()
            .iter()
            .map(|t| t.as_str().to_string())
            .collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn parse_rejects_adjacent_bare_actions() {
        let err = parse(&seq("jump jump")).unwrap_err();
        match err {
            ParseError::Unexpected { position, token } => {
                assert_eq!(position, 1);
                assert_eq!(token, "jump");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_smallest_derivation() {
        let ast = parse(&seq("jump")).unwrap();
        assert_eq!(
            ast,
            CommandAst::Single(Clause {
                verb: VerbPhrase::Bare(Action::Jump),
                repeat: Repeat::None
            })
        );
    }

    #[test]
    fn round_trip_and_agreement_on_full_set() {
        for s in enumerate_commands() {
            let ast = parse(&s.source).expect("grammatical");
            assert_eq!(render_command(&ast), s.source);
            assert_eq!(interpret(&ast), s.target);
        }
    }

    #[test]
    fn target_length_extrema() {
        let commands = enumerate_commands();
        let max = commands.iter().map(|s| s.target.len()).max().unwrap();
        let min = commands.iter().map(|s| s.target.len()).min().unwrap();
        assert_eq!(max, 48);
        assert_eq!(min, 1);
        let longest = Sample::parse_line(
            &format!(
                "jump around left thrice after jump around left thrice\t{}",
                "LTURN JUMP ".repeat(24).trim()
            ),
            1,
        )
        .unwrap();
        assert!(commands.contains(&longest));
    }

    #[test]
    fn enumeration_is_deterministic() {
        assert_eq!(enumerate_commands(), enumerate_commands());
    }

    fn arb_clause() -> impl Strategy<Value = Clause> {
        (0usize..34, 0usize..3).prop_map(|(v, r)| Clause {
            verb: all_verb_phrases()[v],
            repeat: Repeat::ALL[r],
        })
    }

    proptest! {
        #[test]
        fn and_is_concatenation(a in arb_clause(), b in arb_clause()) {
            let lhs = interpret(&CommandAst::And(a, b));
            let mut rhs = interpret(&CommandAst::Single(a));
            rhs.extend(interpret(&CommandAst::Single(b)));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn after_is_swapped_concatenation(a in arb_clause(), b in arb_clause()) {
            let lhs = interpret(&CommandAst::After(a, b));
            let mut rhs = interpret(&CommandAst::Single(b));
            rhs.extend(interpret(&CommandAst::Single(a)));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn twice_doubles_length(v in 0usize..34) {
            let verb = all_verb_phrases()[v];
            let once = interpret(&CommandAst::Single(Clause { verb, repeat: Repeat::None }));
            let twice = interpret(&CommandAst::Single(Clause { verb, repeat: Repeat::Twice }));
            prop_assert_eq!(twice.len(), 2 * once.len());
        }
    }
}
