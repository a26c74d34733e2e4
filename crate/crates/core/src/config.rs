//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, toml::Value>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            if v.is_table() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("nested section [{k}] not supported"),
                });
            }
            values.insert(k, v);
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get_f64(&self, key: &str) -> Option<Result<f64>> {
        self.values.get(key).map(|v| match v {
            toml::Value::Float(f) => Ok(*f),
            toml::Value::Integer(i) => Ok(*i as f64),
            other => Err(Error::InvalidArgument(format!(
                "{key} = {other} is not a number"
            ))),
        })
    }

    pub fn get_usize(&self, key: &str) -> Option<Result<usize>> {
        self.values.get(key).map(|v| match v {
            toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            other => Err(Error::InvalidArgument(format!(
                "{key} = {other} is not a count"
            ))),
        })
    }

    pub fn get_usize_list(&self, key: &str) -> Option<Result<Vec<usize>>> {
        self.values.get(key).map(|v| match v {
            toml::Value::Array(a) => a
                .iter()
                .map(|x| match x {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    other => Err(Error::InvalidArgument(format!(
                        "{key}: {other} is not a count"
                    ))),
                })
                .collect(),
            toml::Value::Integer(i) if *i >= 0 => Ok(vec![*i as usize]),
            other => Err(Error::InvalidArgument(format!(
                "{key} = {other} is not a list"
            ))),
        })
    }

    pub fn get_f64_list(&self, key: &str) -> Option<Result<Vec<f64>>> {
        self.values.get(key).map(|v| match v {
            toml::Value::Array(a) => a
                .iter()
                .map(|x| match x {
                    toml::Value::Float(f) => Ok(*f),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    other => Err(Error::InvalidArgument(format!(
                        "{key}: {other} is not a number"
                    ))),
                })
                .collect(),
            toml::Value::Float(f) => Ok(vec![*f]),
            toml::Value::Integer(i) => Ok(vec![*i as f64]),
            other => Err(Error::InvalidArgument(format!(
                "{key} = {other} is not a list"
            ))),
        })
    }
}
