//! HTTP annotation service over a corpus directory.
//!
//! | method | path                            | body / response                      |
//! |--------|---------------------------------|--------------------------------------|
//! | GET    | `/schema`                       | act inventory                        |
//! | GET    | `/dialogues`                    | `DID`, `Modality`, `Source`, `TurnCount` |
//! | GET    | `/dialogues/{did}`              | dialogue, each turn with `Revision`  |
//! | GET    | `/dialogues/{did}/turns/{uid}`  | turn with `Revision`                 |
//! | PUT    | `/dialogues/{did}/turns/{uid}`  | annotation update → 200, 404, 409, 422 |
//! | GET    | `/stats`                        | corpus statistics                    |
//! | GET    | `/validate`                     | validation report                    |
//! | GET    | `/translit?text=..&direction=`  | Buckwalter passthrough               |

mod http;
mod store;

pub use http::{router, serve, SharedStore};
pub use store::{
    revision_of, AnnotationStore, AnnotationUpdate, DialogueSummary, SegmentUpdate, StoreError,
    StoredTurn, SEG_COUNTER_FILE,
};
