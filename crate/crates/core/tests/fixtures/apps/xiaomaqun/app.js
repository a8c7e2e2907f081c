App({
  globalData: { groups: [] }
});
