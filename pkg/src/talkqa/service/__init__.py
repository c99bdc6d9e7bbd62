from talkqa.service.app import create_app
from talkqa.service.config import StudyConfig, load_config
from talkqa.service.planning import SessionPlan, load_plan, plan_sessions, save_plan
from talkqa.service.state import (
    Decision,
    RaterState,
    StudyService,
    UnknownRaterError,
    UnknownSessionError,
)
from talkqa.service.store import EventLog
