//! The bundled example contracts and scenarios.

pub const BLIND_AUCTION: &str = include_str!("../corpus/blind_auction.fsm");
pub const VOTING: &str = include_str!("../corpus/voting.fsm");
pub const ROCK_PAPER_SCISSORS: &str = include_str!("../corpus/rock_paper_scissors.fsm");

/// Every bundled file as `(file name, contents)`.
pub const FILES: [(&str, &str); 8] = [
    ("blind_auction.fsm", BLIND_AUCTION),
    ("blind_auction_happy.scn", include_str!("../corpus/blind_auction_happy.scn")),
    ("blind_auction_reentry.scn", include_str!("../corpus/blind_auction_reentry.scn")),
    ("voting.fsm", VOTING),
    ("voting_happy.scn", include_str!("../corpus/voting_happy.scn")),
    ("rock_paper_scissors.fsm", ROCK_PAPER_SCISSORS),
    ("rock_paper_scissors_happy.scn", include_str!("../corpus/rock_paper_scissors_happy.scn")),
    ("rock_paper_scissors_cancel.scn", include_str!("../corpus/rock_paper_scissors_cancel.scn")),
];

/// The three contracts, by file name.
pub const CONTRACTS: [(&str, &str); 3] = [
    ("blind_auction.fsm", BLIND_AUCTION),
    ("voting.fsm", VOTING),
    ("rock_paper_scissors.fsm", ROCK_PAPER_SCISSORS),
];

/// Scenario files paired with the contract they drive.
pub const SCENARIOS: [(&str, &str); 5] = [
    ("blind_auction_happy.scn", "blind_auction.fsm"),
    ("blind_auction_reentry.scn", "blind_auction.fsm"),
    ("voting_happy.scn", "voting.fsm"),
    ("rock_paper_scissors_happy.scn", "rock_paper_scissors.fsm"),
    ("rock_paper_scissors_cancel.scn", "rock_paper_scissors.fsm"),
];

pub fn get(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
