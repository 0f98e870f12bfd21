"""Application -> category registry (12 categories, 49 applications by default)."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_CATEGORIES: dict[str, tuple[str, ...]] = {
    "Social Communication": ("Zoom Workplace", "Skype", "People", "Mail"),
    "Multimedia Playback": ("Media Player", "Spotify", "Photos", "TuneIn"),
    "Multimedia Editing": (
        "Adobe Photoshop Express",
        "Microsoft Clipchamp",
        "paint.net",
        "Openshot",
        "Handbrake",
        "Paint",
    ),
    "Office": ("Word", "PowerPoint", "Excel"),
    "Utility Tools": (
        "Calculator",
        "7-Zip",
        "PDF24",
        "Power Automate",
        "Wikipedia",
        "BreeZip",
        "Maps",
        "Calendar",
        "Zotero",
        "DeepL",
    ),
    "Programming": ("Visual Studio Code", "Cursor", "Windows PowerShell ISE"),
    "System Management": ("File Explorer", "Settings", "Control Panel", "Microsoft Store"),
    "Web Browsing": ("Google Chrome", "Microsoft Edge"),
    "Screen Capture": ("Record Screen", "Snipping Tool", "OBS Studio", "ShareX"),
    "Task Management": ("Microsoft To Do", "Todoist", "Notion"),
    "Note Management": ("Evernote", "OneNote", "Sticky Notes", "Sticky Notes (New)"),
    "Lifestyle": ("Recipe Keeper", "paisa"),
}


class UnknownApplicationError(KeyError):
    def __init__(self, application: str) -> None:
        self.application = application
        super().__init__(f"application {application!r} is not in the category registry")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class AppCategoryRegistry:
    categories: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_groups(cls, groups: Mapping[str, Iterable[str]]) -> AppCategoryRegistry:
        mapping: dict[str, str] = {}
        for category, apps in groups.items():
            for app in apps:
                if app in mapping and mapping[app] != category:
                    raise ValueError(f"{app!r} listed under both {mapping[app]!r} and {category!r}")
                mapping[app] = category
        return cls(mapping)

    @classmethod
    def default(cls) -> AppCategoryRegistry:
        return cls.from_groups(DEFAULT_CATEGORIES)

    @classmethod
    def load(cls, path: str | Path) -> AppCategoryRegistry:
        """Read a ``{category: [application, ...]}`` JSON file."""
        with open(path, encoding="utf-8") as fh:
            return cls.from_groups(json.load(fh))

    def category_of(self, application: str) -> str:
        try:
            return self.categories[application]
        except KeyError:
            raise UnknownApplicationError(application) from None

    def groups(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for app, category in self.categories.items():
            out.setdefault(category, []).append(app)
        return out

    def __contains__(self, application: object) -> bool:
        return application in self.categories

    def __len__(self) -> int:
        return len(self.categories)
