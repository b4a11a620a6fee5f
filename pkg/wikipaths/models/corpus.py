from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from wikipaths.core.constants import FALLBACK_CATEGORY


class ArticleDocument(BaseModel):
    """An article as seen by the crawler: body text plus outbound links in document order."""

    model_config = ConfigDict(frozen=True)

    title: str
    body: str = ""
    links: Tuple[str, ...] = ()


class CategoryRecord(BaseModel):
    title: str
    category: str = Field(default=FALLBACK_CATEGORY)

    @field_validator("category")
    @classmethod
    def validate_category(cls, v):
        if not v or not v.strip():
            raise ValueError("category must be nonempty")
        return v

    @property
    def is_fallback(self) -> bool:
        return self.category == FALLBACK_CATEGORY
