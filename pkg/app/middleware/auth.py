"""
API key check for the endpoints that start simulations
"""
import secrets
from typing import Optional

from fastapi import HTTPException, Security
from fastapi.security import APIKeyHeader
from starlette.status import HTTP_401_UNAUTHORIZED, HTTP_403_FORBIDDEN

from app.config import get_settings


API_KEY_HEADER = APIKeyHeader(name="x-api-key", auto_error=False)


def _reject(status_code: int, message: str) -> HTTPException:
    return HTTPException(status_code=status_code, detail={"status": "error", "message": message})


async def verify_api_key(api_key: Optional[str] = Security(API_KEY_HEADER)) -> Optional[str]:
    """
    Guard for compute-heavy endpoints.

    An empty `api_secret_key` setting turns the check off (local use);
    otherwise a missing key is 401 and a wrong one 403.
    """
    expected = get_settings().api_secret_key
    if not expected:
        return None
    if api_key is None:
        raise _reject(HTTP_401_UNAUTHORIZED, "API key is missing. Please provide x-api-key header.")
    if not secrets.compare_digest(api_key.encode(), expected.encode()):
        raise _reject(HTTP_403_FORBIDDEN, "Invalid API key")
    return api_key
