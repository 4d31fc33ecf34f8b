use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BenfordError, GblParams};

/// Standard generalized-Benford parameters for JPEG AC coefficients, one
/// row per quality factor.
pub const BUILTIN_PARAMS: [GblParams; 6] = [
    GblParams::new(1.456, 1.47, 0.0372).for_qf(100),
    GblParams::new(1.255, 1.563, -0.3784).for_qf(90),
    GblParams::new(1.324, 1.653, -0.3739).for_qf(80),
    GblParams::new(1.412, 1.732, -0.337).for_qf(70),
    GblParams::new(1.501, 1.813, -0.3025).for_qf(60),
    GblParams::new(1.579, 1.882, -0.2725).for_qf(50),
];

/// Model parameters keyed by quality factor.
pub type ParamTable = BTreeMap<u32, GblParams>;

/// Built-in row for `qf`, if any.
pub fn builtin_params(qf: u32) -> Option<GblParams> {
    BUILTIN_PARAMS.iter().copied().find(|p| p.qf == Some(qf))
}

pub fn default_param_table() -> ParamTable {
    BUILTIN_PARAMS.iter().map(|p| (p.qf.unwrap(), *p)).collect()
}

/// Parses `qf N q s` lines. Blank lines and `#` comments are ignored.
pub fn parse_param_table(text: &str) -> Result<ParamTable, BenfordError> {
    let mut table = ParamTable::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| BenfordError::ParamFile { line: line_no, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!(
                "expected `qf N q s`, got {} fields",
                fields.len()
            )));
        }
        let qf: u32 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad quality factor {:?}", fields[0])))?;
        if !(1..=100).contains(&qf) {
            return Err(err(format!("quality factor {qf} outside 1..=100")));
        }
        let mut nums = [0.0; 3];
        for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| err(format!("bad number {f:?}")))?;
        }
        let params = GblParams::new(nums[0], nums[1], nums[2]).for_qf(qf);
        if !params.is_valid() {
            return Err(err("parameters violate N > 0, s + x^q > 0".into()));
        }
        if table.insert(qf, params).is_some() {
            return Err(err(format!("duplicate quality factor {qf}")));
        }
    }
    Ok(table)
}

/// Renders a table in the `qf N q s` format, ascending by quality factor.
pub fn format_param_table(table: &ParamTable) -> String {
    let mut out = String::from("# qf N q s\n");
    for (qf, p) in table {
        let _ = writeln!(out, "{qf} {} {} {}", p.n_factor, p.q_exp, p.s_shift);
    }
    out
}
