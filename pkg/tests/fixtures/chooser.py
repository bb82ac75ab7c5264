def _no_links_found_error(
    self,
    package: Package,
    links_seen: int,
    wheels_skipped: int,
    sdists_skipped: int,
    unsupported_wheels: list[str],
) -> PoetryRuntimeError:
    messages = [f"Unable to find installation candidates for {package.pretty_name}"]
    info = f"This is likely not a Poetry issue: {links_seen} candidate(s) were identified for the package"
    if wheels_skipped:
        messages.append(f"{wheels_skipped} wheel(s) were skipped due to the no-binary policy")
    if sdists_skipped:
        messages.append(f"{sdists_skipped} source distribution(s) were skipped due to the only-binary policy")
    if unsupported_wheels:
        messages.append(f"{len(unsupported_wheels)} wheel(s) were skipped for unsupported environment tags")
    source_hint = self._get_source_hint(package)
    if source_hint:
        messages.append(ConsoleMessage(f"Verify the source configured for {source_hint}"))
    return PoetryRuntimeError(f"Unable to find installation candidates for {package.pretty_name}", messages, info)
