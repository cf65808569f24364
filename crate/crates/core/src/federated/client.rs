use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::{pool_forecasts, PooledForecast};
use crate::model::{train_local, ForecastModel, TrainConfig};
use crate::params::ParamVector;
use crate::series::SupervisedWindowSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClientId(String);

impl ClientId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// What a client sends back after local training.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: ClientId,
    /// Locally trained parameters minus the received global parameters.
    pub delta: ParamVector,
    /// Number of local training samples `|D_i|`.
    pub size: usize,
}

/// A participant holding private training and validation windows.
///
/// The model carries the client's own input scaler, fitted on its local
/// training split.
#[derive(Debug, Clone)]
pub struct ClientHandle {
    id: ClientId,
    model: ForecastModel,
    train: SupervisedWindowSet,
    val: Option<SupervisedWindowSet>,
}

impl ClientHandle {
    pub fn new(
        id: ClientId,
        model: ForecastModel,
        train: SupervisedWindowSet,
        val: Option<SupervisedWindowSet>,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Invalid(alloc::format!("client `{id}` has no training samples")));
        }
        let val = val.filter(|v| !v.is_empty());
        Ok(Self { id, model, train, val })
    }

    pub fn id(&self) -> &ClientId {
        &self.id
    }

    /// `|D_i|`.
    pub fn size(&self) -> usize {
        self.train.len()
    }

    /// Forecasts of `theta` on the local validation split, computed on the
    /// client. `None` when the client holds no validation data.
    pub fn validation_forecast(&self, theta: &ParamVector) -> Result<Option<PooledForecast>> {
        self.val.as_ref().map(|v| pool_forecasts(&self.model, theta, v)).transpose()
    }
}

/// Trains from `theta_global` on the client's data and returns the delta.
pub fn client_update(client: &ClientHandle, theta_global: &ParamVector, cfg: &TrainConfig) -> Result<ClientUpdate> {
    let (trained, _) = train_local(&client.model, theta_global, &client.train, cfg)?;
    let delta = trained.sub(theta_global)?;
    Ok(ClientUpdate { client_id: client.id.clone(), delta, size: client.size() })
}
