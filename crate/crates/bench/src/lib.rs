//! Benchmark inputs shared by the criterion targets.

use afscr_core::{parse_kb, parse_model, GoalModel, KnowledgeBase};

pub const FIGURE2: &str = include_str!("../../core/tests/fixtures/figure2.goal");
pub const HEALTHCARE: &str = include_str!("../../core/tests/fixtures/healthcare.goal");
pub const HEALTHCARE_KB: &str = include_str!("../../core/tests/fixtures/healthcare.kb");
pub const HEALTHCARE_CHANGED: &str =
    include_str!("../../core/tests/fixtures/healthcare_changed.goal");
pub const HEALTHCARE_CHANGED_KB: &str =
    include_str!("../../core/tests/fixtures/healthcare_changed.kb");

pub fn load(model: &str, kb: &str) -> (GoalModel, KnowledgeBase) {
    (parse_model(model).unwrap(), parse_kb(kb).unwrap())
}

/// An AND root over `width` binary OR goals: `2^width` ORGMods.
pub fn wide_or_model(width: usize) -> GoalModel {
    let mut src = String::from("actor A \"a\" {\n  goal R \"root\" ie { r };\n");
    let mut ors = Vec::with_capacity(width);
    for i in 0..width {
        src += &format!(
            "  goal O{i} \"o\" ie {{ o{i} }};\n  task X{i} \"x\" ie {{ o{i}, x{i} }};\n  task Y{i} \"y\" ie {{ o{i}, y{i} }};\n  or O{i} -> X{i}, Y{i};\n"
        );
        ors.push(format!("O{i}"));
    }
    src += &format!("  and R -> {};\n}}\n", ors.join(", "));
    parse_model(&src).unwrap()
}
