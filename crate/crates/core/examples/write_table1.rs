//! Regenerates `scenarios/table1.json` from the built-in default.
use macsim_core::Scenario;

fn main() {
    let mut text = Scenario::table1(macsim_core::scenario::DEFAULT_LOAD_FACTOR).to_json();
    text.push('\n');
    print!("{text}");
}
