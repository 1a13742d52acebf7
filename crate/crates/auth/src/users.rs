use std::sync::Arc;

use medshare_storage::{Collection, DocumentStore, Query};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Role, UserAccount};

pub const USERS: &str = "users";
const EMAILS: &str = "user_emails";
const SINGLETONS: &str = "user_singletons";
const TRUSTED_ENTITY_SLOT: &str = "trusted_entity";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Claim {
    user_id: String,
}

/// Account registry over the shared document store. Uniqueness of emails
/// and of the trusted entity is enforced with insert-if-absent claims.
#[derive(Clone)]
pub struct UserDirectory {
    users: Collection<UserAccount>,
    emails: Collection<Claim>,
    singletons: Collection<Claim>,
}

pub(crate) enum Reservation {
    Ok,
    EmailTaken,
    TrustedEntityTaken,
}

pub fn normalize_email(email: &str) -> String {
    email.trim().to_lowercase()
}

impl UserDirectory {
    pub fn new(store: Arc<dyn DocumentStore>) -> Self {
        Self {
            users: Collection::new(store.clone(), USERS),
            emails: Collection::new(store.clone(), EMAILS),
            singletons: Collection::new(store, SINGLETONS),
        }
    }

    pub fn get(&self, user_id: &str) -> Result<Option<UserAccount>> {
        Ok(self.users.get(user_id)?)
    }

    pub fn by_email(&self, email: &str) -> Result<Option<UserAccount>> {
        match self.emails.get(&normalize_email(email))? {
            Some(claim) => self.get(&claim.user_id),
            None => Ok(None),
        }
    }

    pub fn trusted_entity(&self) -> Result<Option<UserAccount>> {
        match self.singletons.get(TRUSTED_ENTITY_SLOT)? {
            Some(claim) => self.get(&claim.user_id),
            None => Ok(None),
        }
    }

    pub fn with_role(&self, role: Role) -> Result<Vec<UserAccount>> {
        Ok(self
            .users
            .query(&Query::all())?
            .into_iter()
            .filter(|u| u.has_role(role))
            .collect())
    }

    pub(crate) fn create(&self, account: &UserAccount) -> Result<Reservation> {
        let claim = Claim { user_id: account.user_id.clone() };
        let email = normalize_email(&account.email);
        if !self.emails.insert(&email, &claim)? {
            return Ok(Reservation::EmailTaken);
        }
        if account.has_role(Role::TrustedEntity) && !self.singletons.insert(TRUSTED_ENTITY_SLOT, &claim)? {
            self.emails.delete(&email)?;
            return Ok(Reservation::TrustedEntityTaken);
        }
        self.users.put(&account.user_id, account)?;
        Ok(Reservation::Ok)
    }
}
