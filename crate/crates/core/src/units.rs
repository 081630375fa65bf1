//! Unit-tagged quantities such as `"12 pF"`, `"1 GOhm"` or `"2 nV/rtHz"`.

/// Physical dimension expected by a config field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Farad,
    Ohm,
    Ampere,
    Volt,
    Hertz,
    Kelvin,
    Degree,
    VoltPerPascal,
    VoltPerRootHertz,
    AmperePerVolt,
}

impl Unit {
    fn aliases(self) -> &'static [&'static str] {
        match self {
            Unit::Farad => &["F"],
            Unit::Ohm => &["Ohm", "ohm", "Ω"],
            Unit::Ampere => &["A"],
            Unit::Volt => &["V"],
            Unit::Hertz => &["Hz"],
            Unit::Kelvin => &["K"],
            Unit::Degree => &["deg", "°"],
            Unit::VoltPerPascal => &["V/Pa"],
            Unit::VoltPerRootHertz => &["V/rtHz", "V/√Hz", "V/sqrt(Hz)"],
            Unit::AmperePerVolt => &["A/V"],
        }
    }

    pub fn symbol(self) -> &'static str {
        self.aliases()[0]
    }

    fn prefixable(self) -> bool {
        !matches!(self, Unit::Kelvin | Unit::Degree)
    }
}

fn prefix_scale(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        "T" => 1e12,
        _ => return None,
    })
}

/// Parses `"<number> [prefix]<unit>"` into SI base units.
pub fn parse_quantity(text: &str, unit: Unit) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-')
                && !((c == 'e' || c == 'E')
                    && text[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+'))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, rest) = text.split_at(split);
    let value: f64 = num.parse().map_err(|_| format!("`{text}` does not start with a number"))?;
    let rest = rest.trim_start();
    if rest.is_empty() {
        return Err(format!("`{text}` is missing a unit (expected {})", unit.symbol()));
    }
    for alias in unit.aliases() {
        if let Some(prefix) = rest.strip_suffix(alias) {
            if !prefix.is_empty() && !unit.prefixable() {
                break;
            }
            if let Some(scale) = prefix_scale(prefix) {
                let v = value * scale;
                return if v.is_finite() { Ok(v) } else { Err(format!("`{text}` is not finite")) };
            }
        }
    }
    Err(format!("`{text}` has unit `{rest}`, expected {}", unit.symbol()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn prefixed_units() {
        assert_relative_eq!(parse_quantity("12 pF", Unit::Farad).unwrap(), 12e-12);
        assert_eq!(parse_quantity("1 GOhm", Unit::Ohm).unwrap(), 1e9);
        assert_eq!(parse_quantity("1GΩ", Unit::Ohm).unwrap(), 1e9);
        assert_relative_eq!(parse_quantity("0.4 pA", Unit::Ampere).unwrap(), 0.4e-12);
        assert_eq!(parse_quantity("20 kHz", Unit::Hertz).unwrap(), 20e3);
        assert_eq!(parse_quantity("300 K", Unit::Kelvin).unwrap(), 300.0);
        assert_eq!(parse_quantity("60 deg", Unit::Degree).unwrap(), 60.0);
        assert_relative_eq!(parse_quantity("2 nV/rtHz", Unit::VoltPerRootHertz).unwrap(), 2e-9);
        assert_relative_eq!(parse_quantity("10 mV/Pa", Unit::VoltPerPascal).unwrap(), 10e-3);
        assert_relative_eq!(parse_quantity("1 nA/V", Unit::AmperePerVolt).unwrap(), 1e-9);
        assert_relative_eq!(parse_quantity("1.5e-3 F", Unit::Farad).unwrap(), 1.5e-3);
        assert_eq!(parse_quantity("-1 pF", Unit::Farad).unwrap(), -1e-12);
    }

    #[test]
    fn rejects_bad_units() {
        assert!(parse_quantity("12", Unit::Farad).unwrap_err().contains("missing a unit"));
        assert!(parse_quantity("12 pA", Unit::Farad).is_err());
        assert!(parse_quantity("12 xF", Unit::Farad).is_err());
        assert!(parse_quantity("300 mK", Unit::Kelvin).is_err());
        assert!(parse_quantity("pF", Unit::Farad).is_err());
    }
}
