use super::IoError;

/// Hourly multipliers applied to rated load power.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadShape {
    pub name: String,
    pub values: Vec<f64>,
}

impl LoadShape {
    /// Multiplier for hour `t`, wrapping around the end of the shape.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t % self.values.len()]
    }
}

/// One multiplier per row. A non-numeric first row is taken as a header and
/// names the shape.
pub fn parse_loadshape(csv: &str) -> Result<LoadShape, IoError> {
    let mut name = String::from("loadshape");
    let mut values = Vec::new();
    let mut first = true;
    for (i, raw) in csv.lines().enumerate() {
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let parsed = row.parse::<f64>();
        if first && parsed.is_err() {
            name = row.trim_matches('"').to_string();
            first = false;
            continue;
        }
        first = false;
        let v = parsed.map_err(|_| IoError::Format {
            line: i + 1,
            reason: format!("not a number: {row}"),
        })?;
        if !v.is_finite() || v < 0.0 {
            return Err(IoError::Format {
                line: i + 1,
                reason: format!("multipliers must be finite and non-negative, got {v}"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(IoError::Format {
            line: 0,
            reason: "loadshape has no rows".into(),
        });
    }
    Ok(LoadShape { name, values })
}

pub fn write_loadshape(shape: &LoadShape) -> String {
    let mut out = String::with_capacity(shape.values.len() * 20 + 16);
    out.push_str(&shape.name);
    out.push('\n');
    for v in &shape.values {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}
