//! Holds the `acceptance` test target; run it with `cargo test -p credit-game-suite --test acceptance`.
