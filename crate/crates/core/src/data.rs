//! Observations, datasets, and the `time,event,arm` CSV format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Control,
    Treatment,
}

impl Arm {
    pub fn indicator(self) -> u8 {
        match self {
            Arm::Control => 0,
            Arm::Treatment => 1,
        }
    }

    pub fn from_indicator(value: u8) -> Result<Self> {
        match value {
            0 => Ok(Arm::Control),
            1 => Ok(Arm::Treatment),
            other => Err(Error::InvalidData(format!("arm must be 0 or 1, got {other}"))),
        }
    }

    pub fn other(self) -> Self {
        match self {
            Arm::Control => Arm::Treatment,
            Arm::Treatment => Arm::Control,
        }
    }
}

/// One subject: observed time, whether the event was seen (false = right-censored), and arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
    pub arm: Arm,
}

impl Observation {
    pub fn new(time: f64, event: bool, arm: Arm) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidData(format!("time must be finite and nonnegative, got {time}")));
        }
        Ok(Observation { time, event, arm })
    }
}

/// A nonempty collection of observations in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    observations: Vec<Observation>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    time: f64,
    event: u8,
    arm: u8,
}

impl SurvivalDataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        for obs in &observations {
            if !(obs.time.is_finite() && obs.time >= 0.0) {
                return Err(Error::InvalidData(format!("invalid time {}", obs.time)));
            }
        }
        Ok(SurvivalDataset { observations })
    }

    /// Builds a dataset from parallel columns; `arms` holds 0/1 indicators.
    pub fn from_columns(times: &[f64], events: &[bool], arms: &[u8]) -> Result<Self> {
        if times.len() != events.len() || times.len() != arms.len() {
            return Err(Error::InvalidData("column lengths differ".into()));
        }
        let observations = times
            .iter()
            .zip(events)
            .zip(arms)
            .map(|((&t, &e), &a)| Observation::new(t, e, Arm::from_indicator(a)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(observations)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.time).collect()
    }

    pub fn count(&self, arm: Arm) -> usize {
        self.observations.iter().filter(|o| o.arm == arm).count()
    }

    pub fn events_in(&self, arm: Arm) -> usize {
        self.observations.iter().filter(|o| o.arm == arm && o.event).count()
    }

    pub fn event_count(&self) -> usize {
        self.observations.iter().filter(|o| o.event).count()
    }

    /// Same subjects with control and treatment labels exchanged.
    pub fn with_arms_swapped(&self) -> Self {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation { arm: o.arm.other(), ..*o })
            .collect();
        SurvivalDataset { observations }
    }

    /// Applies `f` to every time. `f` must map nonnegative reals to nonnegative reals.
    pub fn map_times(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation::new(f(o.time), o.event, o.arm))
            .collect::<Result<Vec<_>>>()?;
        Self::new(observations)
    }

    /// Reads the `time,event,arm` format. The header is mandatory; column order is free.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        for required in ["time", "event", "arm"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::InvalidData(format!("missing `{required}` column in header")));
            }
        }
        let mut observations = Vec::new();
        for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let event = match row.event {
                0 => false,
                1 => true,
                other => {
                    return Err(Error::InvalidData(format!(
                        "row {}: event must be 0 or 1, got {other}",
                        line + 1
                    )))
                }
            };
            let arm = Arm::from_indicator(row.arm)
                .map_err(|e| Error::InvalidData(format!("row {}: {e}", line + 1)))?;
            let obs = Observation::new(row.time, event, arm)
                .map_err(|e| Error::InvalidData(format!("row {}: {e}", line + 1)))?;
            observations.push(obs);
        }
        Self::new(observations)
    }

    /// Writes the `time,event,arm` format with shortest round-trip decimal times.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for o in &self.observations {
            wtr.serialize(CsvRow { time: o.time, event: o.event as u8, arm: o.arm.indicator() })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let data = SurvivalDataset::from_columns(
            &[0.1, 1.0 / 3.0, 2.5e-9, 7.0],
            &[true, false, true, true],
            &[0, 1, 1, 0],
        )
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,event,arm\n"));
        assert!(text.contains("0.3333333333333333,0,1"));
        assert_eq!(SurvivalDataset::read_csv(&buf[..]).unwrap(), data);
    }

    #[test]
    fn rejects_bad_csv() {
        assert!(SurvivalDataset::read_csv("1,1,0\n".as_bytes()).is_err());
        assert!(SurvivalDataset::read_csv("time,event,arm\n1,2,0\n".as_bytes()).is_err());
        assert!(SurvivalDataset::read_csv("time,event,arm\n1,1,3\n".as_bytes()).is_err());
        assert!(SurvivalDataset::read_csv("time,event,arm\n-1,1,0\n".as_bytes()).is_err());
        assert!(SurvivalDataset::read_csv("time,event,arm\n".as_bytes()).is_err());
        assert!(SurvivalDataset::read_csv("time,event,arm\nabc,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn column_order_is_free() {
        let data = SurvivalDataset::read_csv("arm,time,event\n1,2.5,0\n".as_bytes()).unwrap();
        assert_eq!(data.observations()[0], Observation { time: 2.5, event: false, arm: Arm::Treatment });
    }

    #[test]
    fn rejects_invalid_observations() {
        assert!(SurvivalDataset::new(vec![]).is_err());
        assert!(Observation::new(f64::NAN, true, Arm::Control).is_err());
        assert!(SurvivalDataset::from_columns(&[1.0], &[true, false], &[0]).is_err());
    }
}
